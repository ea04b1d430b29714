"""
baseline.py: conventional pilot-based receiver

Per pilot subcarrier, least-squares estimation from the pilot book;
interpolation of the full CFR through the L-tap impulse response; then
per-subcarrier MRC or MMSE combining.

ChannelEstimate carries, next to Lambda_hat, the K x K noise term B that
the combiners subtract from Lambda_hat^H Lambda_hat. For a pilot estimate
B = (Q sigma^2 / Np^2) P P^H; a virtual-pilot estimate (see sliding.py)
substitutes its own, so the combiners here never need to know which kind
of estimate they were given.
"""

import numpy as np

from slidemimo.log import debug
from slidemimo.util import SimError
from slidemimo.waveform import hardDecision
from slidemimo.pilots import CONVENTIONAL, interpolationMatrix

PILOT = 'pilot'
VIRTUAL = 'virtual-pilot'
INTERPOLATED = 'interpolated'
PERFECT = 'perfect'

# Gamma diagonals are clamped below at GAMMAFLOOR * Q
GAMMAFLOOR = 1e-9
# Relative ridge added when the MMSE Gram matrix is singular
RIDGE = 1e-12


class ChannelEstimate( object ):
    "Estimated Q x K channel of one subcarrier."

    def __init__( self, lambdaHat, source=PILOT, noiseMitigation=None ):
        """lambdaHat: Q x K estimate
           source: PILOT, VIRTUAL, INTERPOLATED or PERFECT
           noiseMitigation: K x K Hermitian PSD term B (default zero)"""
        self.lambdaHat = np.asarray( lambdaHat, dtype=complex )
        if self.lambdaHat.ndim != 2:
            raise SimError( 'channel estimate must be Q x K' )
        K = self.lambdaHat.shape[ 1 ]
        self.source = source
        self.noiseMitigation = (
            np.zeros( ( K, K ), dtype=complex ) if noiseMitigation is None
            else np.asarray( noiseMitigation, dtype=complex ) )
        self._mmse = {}

    @property
    def Q( self ):
        return self.lambdaHat.shape[ 0 ]

    @property
    def K( self ):
        return self.lambdaHat.shape[ 1 ]

    def gram( self ):
        "Lambda_hat^H Lambda_hat - B"
        return self.lambdaHat.conj().T @ self.lambdaHat - self.noiseMitigation

    def mrcFilter( self, floor=GAMMAFLOOR ):
        "K x Q MRC combiner Gamma^-1 Lambda_hat^H"
        gamma = np.real( np.diag( self.gram() ) )
        gamma = np.maximum( gamma, floor * self.Q )
        return self.lambdaHat.conj().T / gamma[ :, None ]

    def mmseFilter( self, noiseVar, ridge=RIDGE ):
        """K x Q MMSE combiner
           (Lambda_hat^H Lambda_hat - B + sigma^2 I)^-1 Lambda_hat^H,
           cached per noise variance"""
        key = ( float( noiseVar ), ridge )
        if key not in self._mmse:
            self._mmse[ key ] = mmseFilter( self, noiseVar, ridge )
        return self._mmse[ key ]

    def __repr__( self ):
        return 'ChannelEstimate(%s, %dx%d)' % ( self.source, self.Q, self.K )


def lsEstimate( Ypilot, book, noiseVar=0.0 ):
    """Least-squares estimate from received pilots.
       Ypilot: Q x Np received pilot columns
       book: PilotBook (K x Np)
       noiseVar: noise variance, for the mitigation term
       returns: ChannelEstimate, Lambda_hat = Y P^H / Np"""
    Ypilot = np.asarray( Ypilot, dtype=complex )
    if Ypilot.shape[ 1 ] != book.Np:
        raise SimError( 'received %d pilot columns, book has %d'
                        % ( Ypilot.shape[ 1 ], book.Np ) )
    Np, Q = book.Np, Ypilot.shape[ 0 ]
    lambdaHat = Ypilot @ book.matrix.conj().T / Np
    mitigation = Q * noiseVar / Np ** 2 * book.gram()
    return ChannelEstimate( lambdaHat, PILOT, mitigation )


def reconstructCfr( estimates, indices, M, L ):
    """Interpolate the CFR of all subcarriers from L pilot subcarriers.
       estimates: L ChannelEstimates at the subcarriers in indices
       indices: pilot subcarrier set (|indices| = L)
       M: number of subcarriers
       L: channel length
       returns: list of M ChannelEstimates; each inherits the pilot
                noise term of the first pilot estimate"""
    if len( estimates ) != L or len( indices ) != L:
        raise SimError( 'need exactly L=%d pilot estimates' % L )
    F = interpolationMatrix( M, indices, L )
    cond = np.linalg.cond( F )
    if not np.isfinite( cond ) or cond > 1e6:
        raise SimError( 'pilot interpolation matrix is ill-conditioned '
                        '(cond=%.3g)' % cond )
    stacked = np.stack( [ e.lambdaHat for e in estimates ] )
    L_, Q, K = stacked.shape
    # lambda^I = sqrt(M) F h  ->  h = F^-1 lambda^I / sqrt(M)
    h = np.linalg.solve( F, stacked.reshape( L, Q * K ) ) / np.sqrt( M )
    lam = np.fft.fft( h, n=M, axis=0 ).reshape( M, Q, K )
    mitigation = estimates[ 0 ].noiseMitigation
    return [ ChannelEstimate( lam[ m ], INTERPOLATED, mitigation )
             for m in range( M ) ]


def mrcCombine( Y, estimate, floor=GAMMAFLOOR ):
    """Maximum ratio combining with noise-mitigated normalization.
       Y: Q x n received columns
       estimate: ChannelEstimate
       floor: Gamma diagonals are clamped at floor * Q
       returns: K x n soft symbols Gamma^-1 Lambda_hat^H Y"""
    return estimate.mrcFilter( floor ) @ np.asarray( Y, dtype=complex )


def mmseFilter( estimate, noiseVar, ridge=RIDGE ):
    """K x Q MMSE combining matrix of an estimate.
       Adds ridge * trace/K * I when the K x K matrix is singular."""
    A = estimate.gram() + noiseVar * np.eye( estimate.K )
    A = 0.5 * ( A + A.conj().T )
    LH = estimate.lambdaHat.conj().T
    try:
        return np.linalg.solve( A, LH )
    except np.linalg.LinAlgError:
        load = ridge * np.real( np.trace( A ) ) / estimate.K
        debug( 'mmseFilter: singular Gram matrix, ridge %.3g\n' % load )
        try:
            return np.linalg.solve( A + load * np.eye( estimate.K ), LH )
        except np.linalg.LinAlgError:
            raise SimError( 'MMSE Gram matrix not invertible' )


def mmseCombine( Y, estimate, noiseVar, ridge=RIDGE ):
    """MMSE combining.
       Y: Q x n received columns
       estimate: ChannelEstimate (its noise term is used)
       noiseVar: noise variance
       returns: K x n soft symbols"""
    return estimate.mmseFilter( noiseVar, ridge ) @ np.asarray(
        Y, dtype=complex )


class DetectionResult( object ):
    "Receiver output for one frame."

    def __init__( self, soft, constellation, dataMask, estimates=None,
                  refused=0, scheme=None ):
        """soft: M x K x N soft symbol estimates
           constellation: Constellation used for hard decisions
           dataMask: M x N boolean, True on data REs
           estimates: per-subcarrier ChannelEstimate or None
           refused: number of refused virtual-pilot updates"""
        self.soft = np.asarray( soft, dtype=complex )
        self.dataMask = np.asarray( dataMask, dtype=bool )
        self.hard, self.hardBits = hardDecision( self.soft, constellation )
        self.estimates = estimates
        self.refused = refused
        self.scheme = scheme

    def userSoft( self, k ):
        "Soft data symbols of user k, in row-major mask order"
        return self.soft[ :, k, : ][ self.dataMask ]

    def userBits( self, k ):
        "Decided data bits of user k, in transmission order"
        return self.hardBits[ :, k, :, : ][ self.dataMask ].ravel()


def _detectAll( grid, filters ):
    "Apply per-subcarrier K x Q filters to a SpaceTimeGrid -> M x K x N"
    return np.matmul( np.stack( filters ), grid.samples )

def runConventional( grid, placement, book, config, constellation, L,
                     combiner='mmse', noiseVar=None ):
    """Conventional receiver: LS at L pilot subcarriers, CFR
       interpolation, per-subcarrier combining.
       grid: SpaceTimeGrid
       placement: conventional PilotPlacement
       book: PilotBook
       config: SystemConfig
       constellation: Constellation
       L: channel length assumed by the interpolation
       combiner: 'mmse' or 'mrc'
       noiseVar: override config.noiseVar
       returns: DetectionResult"""
    grid.check( config )
    if placement.scheme != CONVENTIONAL:
        raise SimError( 'conventional receiver needs the conventional '
                        'pilot placement' )
    noiseVar = config.noiseVar if noiseVar is None else noiseVar
    pilots = [ lsEstimate( grid.pilotPart( m, config.Np ), book, noiseVar )
               for m in placement.subcarriers ]
    estimates = reconstructCfr( pilots, placement.subcarriers, config.M, L )
    if combiner == 'mmse':
        filters = [ e.mmseFilter( noiseVar ) for e in estimates ]
    elif combiner == 'mrc':
        filters = [ e.mrcFilter() for e in estimates ]
    else:
        raise SimError( 'unknown combiner %s' % combiner )
    soft = _detectAll( grid, filters )
    return DetectionResult( soft, constellation,
                            ~placement.mask( config.M, config.N ),
                            estimates, scheme='conventional-' + combiner )


def runIdeal( grid, cfr, placement, config, constellation, noiseVar=None ):
    """MMSE combining with the true CFR and no noise term.
       cfr: CfrTensor of the realization
       placement: PilotPlacement whose data mask is evaluated"""
    grid.check( config )
    noiseVar = config.noiseVar if noiseVar is None else noiseVar
    estimates = [ ChannelEstimate( cfr.subcarrier( m ), PERFECT )
                  for m in range( config.M ) ]
    soft = _detectAll( grid, [ e.mmseFilter( noiseVar ) for e in estimates ] )
    return DetectionResult( soft, constellation,
                            ~placement.mask( config.M, config.N ),
                            estimates, scheme='ideal-mmse' )
