"""
waveform.py: constellation, frame and OFDM modem abstractions

SystemConfig: dimensioning and physics parameters shared by every stage

Constellation: unit-power square QAM with a Gray-coded bit labelling

UserFrame: one user's M x N time-frequency grid X^k = [P^k, D^k]

SpaceTimeGrid: received M x Q x N tensor; grid.subcarrier( m ) is the
    Q x N space-time matrix of one subcarrier

The DFT is unitary in both directions (1/sqrt(M) each way), so a
channel's frequency response carries an explicit sqrt(M) factor (see
channel.cirToCfr).
"""

import numpy as np

from slidemimo.util import SimError


class SystemConfig( object ):
    "Dimensioning and physics parameters for one simulated uplink frame."

    fields = ( 'M', 'Mcp', 'K', 'Q', 'Np', 'Nd', 'deltaF', 'noiseVar',
               'depth', 'order', 'seed', 'reference', 'root' )

    def __init__( self, M=1024, Mcp=128, K=7, Q=200, Np=7, Nd=7,
                  deltaF=15e3, noiseVar=1.0, depth=3, order=16, seed=0,
                  reference=None, root=1 ):
        """M: number of subcarriers
           Mcp: cyclic prefix length in samples
           K: number of single-antenna users
           Q: number of BS antennas
           Np: pilot time slots per frame
           Nd: data time slots per frame
           deltaF: subcarrier spacing (Hz)
           noiseVar: noise variance per complex frequency-domain sample
           depth: sliding depth D >= 0
           order: QAM constellation size
           seed: master RNG seed
           reference: reference pilot subcarrier (default M//2)
           root: Zadoff-Chu root index"""
        self.M = int( M )
        self.Mcp = int( Mcp )
        self.K = int( K )
        self.Q = int( Q )
        self.Np = int( Np )
        self.Nd = int( Nd )
        self.deltaF = float( deltaF )
        self.noiseVar = float( noiseVar )
        self.depth = int( depth )
        self.order = int( order )
        self.seed = int( seed )
        self.reference = ( self.M // 2 if reference is None
                           else int( reference ) % self.M )
        self.root = int( root )
        self.check()

    @property
    def N( self ):
        "Frame length in OFDM symbols"
        return self.Np + self.Nd

    @property
    def sampleRate( self ):
        "Sample rate fs = M * deltaF (Hz)"
        return self.M * self.deltaF

    def check( self ):
        "Raise SimError unless the configuration is consistent."
        if self.M < 1 or self.K < 1 or self.Q < 1:
            raise SimError( 'M, K and Q must be positive (M=%d K=%d Q=%d)'
                            % ( self.M, self.K, self.Q ) )
        if self.Np < self.K:
            raise SimError( 'need Np >= K pilot slots (Np=%d K=%d)'
                            % ( self.Np, self.K ) )
        if self.Nd < 0 or self.Mcp < 0 or self.depth < 0:
            raise SimError( 'Nd, Mcp and depth must be nonnegative' )
        if self.deltaF <= 0:
            raise SimError( 'subcarrier spacing must be positive' )
        if self.noiseVar < 0:
            raise SimError( 'noise variance must be nonnegative' )
        # Raises on a bad order
        Constellation.checkOrder( self.order )

    def checkChannelLength( self, L ):
        "Raise SimError if an L-tap channel cannot be used here."
        if L > self.M:
            raise SimError( 'channel length L=%d exceeds M=%d'
                            % ( L, self.M ) )
        if L - 1 > self.Mcp:
            raise SimError( 'channel length L=%d too long for CP of %d '
                            'samples (need Mcp >= L-1)' % ( L, self.Mcp ) )

    def copy( self, **overrides ):
        "Return a copy with some fields replaced"
        params = self.asDict()
        params.update( overrides )
        return SystemConfig( **params )

    def asDict( self ):
        "Return fields as a JSON-friendly dict"
        return { name: getattr( self, name ) for name in self.fields }

    @classmethod
    def fromDict( cls, params ):
        "Build from a dict whose keys are field names"
        unknown = set( params ) - set( cls.fields )
        if unknown:
            raise SimError( 'unknown SystemConfig field(s): %s'
                            % ', '.join( sorted( unknown ) ) )
        return cls( **params )

    def __repr__( self ):
        return 'SystemConfig(%s)' % ', '.join(
            '%s=%s' % ( name, getattr( self, name ) )
            for name in self.fields )


class Constellation( object ):
    """Square QAM with unit average power.
       Points are indexed by the integer value of their bit label; the
       real-part bits come first (most significant). On each axis the
       first bit selects the sign (0: positive) and the remaining bits
       Gray-code the magnitude, so 0000 in 16-QAM is (1+1j)/sqrt(10)."""

    def __init__( self, order=16 ):
        self.checkOrder( order )
        self.order = int( order )
        self.bitsPerSymbol = int( np.log2( order ) )
        half = self.bitsPerSymbol // 2
        labels = np.arange( self.order )
        reLevels = self.pamLevels( labels >> half, half )
        imLevels = self.pamLevels( labels & ( ( 1 << half ) - 1 ), half )
        scale = np.sqrt( 2.0 * ( self.order - 1 ) / 3.0 )
        self.points = ( reLevels + 1j * imLevels ) / scale
        shifts = np.arange( self.bitsPerSymbol - 1, -1, -1 )
        self.bitLabels = ( ( labels[ :, None ] >> shifts ) & 1 ).astype(
            np.uint8 )
        self.weights = 1 << shifts

    @staticmethod
    def checkOrder( order ):
        "Raise SimError unless order is a power of 4 (>= 4)"
        order = int( order )
        bits = order.bit_length() - 1
        if order < 4 or order != 1 << bits or bits % 2:
            raise SimError( 'QAM order must be a power of 4, not %s'
                            % order )

    @staticmethod
    def pamLevels( axisLabels, nbits ):
        """Odd PAM levels for per-axis labels.
           axisLabels: integer labels of nbits bits each"""
        sign = np.where( axisLabels >> ( nbits - 1 ) & 1, -1, 1 )
        gray = axisLabels & ( ( 1 << ( nbits - 1 ) ) - 1 )
        # Gray to binary
        index = gray.copy()
        shift = 1
        while shift < nbits:
            index ^= index >> shift
            shift <<= 1
        return sign * ( 2 * index + 1 )

    def indices( self, bits ):
        """Constellation indices for a bit sequence.
           bits: 0/1 array, length divisible by bitsPerSymbol"""
        bits = np.asarray( bits ).ravel()
        if bits.size % self.bitsPerSymbol:
            raise SimError( '%d bits do not divide into %d-bit symbols'
                            % ( bits.size, self.bitsPerSymbol ) )
        groups = bits.reshape( -1, self.bitsPerSymbol ).astype( np.int64 )
        return groups @ self.weights

    def __repr__( self ):
        return 'Constellation(%d-QAM)' % self.order


def mapBits( bits, constellation ):
    """Map bits to constellation points.
       bits: 0/1 sequence, length divisible by log2(order)
       constellation: Constellation
       returns: complex symbol array"""
    return constellation.points[ constellation.indices( bits ) ]

# Chunk size for the distance matrix in hardDecision
DECISIONCHUNK = 1 << 16

def hardDecision( soft, constellation ):
    """Nearest-point decision.
       soft: complex scalar or array
       constellation: Constellation
       returns: ( points, bits ) with bits of shape soft.shape + (b,);
       equidistant points resolve to the lowest constellation index"""
    soft = np.asarray( soft, dtype=complex )
    flat = soft.ravel()
    idx = np.empty( flat.size, dtype=np.int64 )
    points = constellation.points
    for start in range( 0, flat.size, DECISIONCHUNK ):
        chunk = flat[ start:start + DECISIONCHUNK ]
        diff = chunk[ :, None ] - points[ None, : ]
        dist = diff.real ** 2 + diff.imag ** 2
        idx[ start:start + chunk.size ] = np.argmin( dist, axis=1 )
    idx = idx.reshape( soft.shape )
    return points[ idx ], constellation.bitLabels[ idx ]


class UserFrame( object ):
    "One user's transmitted time-frequency grid."

    def __init__( self, symbols, pilotMask, bits ):
        """symbols: M x N complex grid
           pilotMask: M x N boolean, True on pilot REs
           bits: source bits carried by the data REs, in row-major
                 (subcarrier, symbol) order of the data mask"""
        self.symbols = np.asarray( symbols, dtype=complex )
        self.pilotMask = np.asarray( pilotMask, dtype=bool )
        self.bits = np.asarray( bits, dtype=np.uint8 )
        if self.symbols.shape != self.pilotMask.shape:
            raise SimError( 'frame grid %s and pilot mask %s differ'
                            % ( self.symbols.shape, self.pilotMask.shape ) )

    @property
    def dataMask( self ):
        "True on data REs"
        return ~self.pilotMask

    @property
    def M( self ):
        return self.symbols.shape[ 0 ]

    @property
    def N( self ):
        return self.symbols.shape[ 1 ]

    def dataSymbols( self ):
        "Data symbols in row-major mask order"
        return self.symbols[ self.dataMask ]


def _grid( frame ):
    "Symbols of a UserFrame, or the array itself"
    return frame.symbols if isinstance( frame, UserFrame ) else np.asarray(
        frame, dtype=complex )

def ofdmModulate( frame, config ):
    """OFDM modulation with cyclic prefix.
       frame: UserFrame or M x N array
       config: SystemConfig
       returns: N*(M+Mcp) time-domain samples, symbol after symbol"""
    X = _grid( frame )
    M, Mcp = config.M, config.Mcp
    if X.shape[ 0 ] != M:
        raise SimError( 'frame has %d subcarriers, config has %d'
                        % ( X.shape[ 0 ], M ) )
    body = np.fft.ifft( X, axis=0, norm='ortho' )
    withCp = np.concatenate( [ body[ M - Mcp:, : ], body ], axis=0 )
    return withCp.T.ravel()

def ofdmDemodulate( rx, config, N=None ):
    """Remove the cyclic prefix and return to the frequency domain.
       rx: N*(M+Mcp) time-domain samples
       config: SystemConfig
       N: number of OFDM symbols (default config.N)
       returns: M x N complex grid"""
    rx = np.asarray( rx, dtype=complex )
    M, Mcp = config.M, config.Mcp
    N = config.N if N is None else N
    if rx.size != N * ( M + Mcp ):
        raise SimError( 'expected %d samples for %d symbols, got %d'
                        % ( N * ( M + Mcp ), N, rx.size ) )
    symbols = rx.reshape( N, M + Mcp )[ :, Mcp: ]
    return np.fft.fft( symbols, axis=1, norm='ortho' ).T


class SpaceTimeGrid( object ):
    "Received frequency-domain samples of all antennas."

    def __init__( self, samples ):
        "samples: M x Q x N complex tensor"
        self.samples = np.asarray( samples, dtype=complex )
        if self.samples.ndim != 3:
            raise SimError( 'space-time grid must be M x Q x N, got %s'
                            % ( self.samples.shape, ) )

    @property
    def M( self ):
        return self.samples.shape[ 0 ]

    @property
    def Q( self ):
        return self.samples.shape[ 1 ]

    @property
    def N( self ):
        return self.samples.shape[ 2 ]

    def subcarrier( self, m ):
        "Q x N space-time matrix of subcarrier m"
        return self.samples[ m ]

    def pilotPart( self, m, Np ):
        "Q x Np pilot columns of subcarrier m"
        return self.samples[ m, :, :Np ]

    def check( self, config ):
        "Raise SimError unless dimensions match config"
        if ( self.M, self.Q, self.N ) != ( config.M, config.Q, config.N ):
            raise SimError( 'grid is %dx%dx%d, config wants %dx%dx%d'
                            % ( self.M, self.Q, self.N,
                                config.M, config.Q, config.N ) )


def assembleSpaceTime( grids ):
    """Stack per-antenna grids into a SpaceTimeGrid.
       grids: Q arrays of shape M x N
       returns: SpaceTimeGrid with [Y_m]_{q,n} = grids[ q ][ m, n ]"""
    grids = [ np.asarray( g, dtype=complex ) for g in grids ]
    if not grids:
        raise SimError( 'no antenna grids to assemble' )
    shape = grids[ 0 ].shape
    if any( g.shape != shape for g in grids ):
        raise SimError( 'antenna grids differ in shape' )
    return SpaceTimeGrid( np.stack( grids, axis=1 ) )
