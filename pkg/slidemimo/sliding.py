"""
sliding.py: single-reference-subcarrier receiver

Only one subcarrier i carries pilots. Starting from the least-squares
estimate at i, the receiver walks around the band in both directions.
Each subcarrier m is equalized with the MMSE filters of up to D already
estimated neighbours m - xi*dm (dm = 1..D) in the walking direction,
each scaled back by the inverse frequency correlation Psi of the offset.
The hard decisions of m then act as a virtual pilot block, from which a
fresh estimate of m is computed and the walk moves on.

AlphaTable: per-user frequency correlation alpha_k(offset), either from
    the known PDP (exact) or from the coherence bandwidth (approx)

SlidingState: per-pass estimate store and anchor

Offsets are always target minus source subcarrier.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from slidemimo.log import debug
from slidemimo.util import SimError, RefusalError
from slidemimo.waveform import hardDecision
from slidemimo.channel import SampledPdp, coherenceBandwidth
from slidemimo.pilots import SINGLE
from slidemimo.baseline import ( ChannelEstimate, DetectionResult, VIRTUAL,
                                 lsEstimate )

EXACT = 'exact'
APPROX = 'approx'

# Smallest |alpha| an equalizer may divide by
ALPHAMIN = 0.1
# Relative smallest singular value for a usable virtual pilot block
RANKTOL = 1e-6


def _rho( pdp ):
    "Normalized PDP vector of a SampledPdp or a plain array"
    if isinstance( pdp, SampledPdp ):
        return pdp.rho
    rho = np.asarray( pdp, dtype=float ).ravel()
    return rho / rho.sum()

def alphaExact( pdp, offset, M ):
    """Frequency correlation of a known PDP.
       pdp: SampledPdp or tap power vector
       offset: subcarrier offset (any integer)
       M: number of subcarriers
       returns: sum_l rho[l] exp(-j 2 pi offset l / M); exactly 1 at 0"""
    if offset % M == 0:
        return 1 + 0j
    rho = _rho( pdp )
    l = np.arange( rho.size )
    return complex( np.sum( rho * np.exp( -2j * np.pi * offset * l / M ) ) )

def alphaApprox( deltaF, offset, Fc ):
    """Correlation magnitude from the coherence bandwidth.
       deltaF: subcarrier spacing (Hz)
       offset: subcarrier offset
       Fc: coherence bandwidth (Hz), inf for a flat channel
       returns: sqrt( 1 - ( deltaF * offset / Fc )^2 )"""
    ratio = abs( deltaF * offset ) / Fc
    if ratio > 1:
        raise RefusalError( 'offset of %d subcarriers is beyond the '
                            'coherence bandwidth (%.3g Hz)' % ( offset, Fc ) )
    return float( np.sqrt( 1 - ratio ** 2 ) )


class AlphaTable( object ):
    "Per-user correlation coefficients alpha_k(offset)."

    def __init__( self, pdps, M, mode=EXACT, deltaF=None, sampleRate=None,
                  alphaMin=ALPHAMIN ):
        """pdps: list of K SampledPdp, one per user
           M: number of subcarriers
           mode: EXACT (known PDP) or APPROX (coherence bandwidth)
           deltaF: subcarrier spacing, needed for APPROX
           sampleRate: fs, needed for APPROX (default M * deltaF)
           alphaMin: guard for psi()"""
        if mode not in ( EXACT, APPROX ):
            raise SimError( 'unknown alpha mode %s - use %s or %s'
                            % ( mode, EXACT, APPROX ) )
        self.pdps = list( pdps )
        self.M = int( M )
        self.mode = mode
        self.alphaMin = alphaMin
        if mode == EXACT:
            # alpha_k(offset) = fft( rho_k )[ offset mod M ]
            self.table = np.stack( [ np.fft.fft( p.padded( self.M ) )
                                     for p in self.pdps ] )
            self.table[ :, 0 ] = 1
        else:
            if deltaF is None:
                raise SimError( 'approximate alpha needs deltaF' )
            self.deltaF = float( deltaF )
            fs = self.M * self.deltaF if sampleRate is None else sampleRate
            self.Fc = np.array( [ coherenceBandwidth( p, fs )
                                  for p in self.pdps ] )

    @classmethod
    def fromConfig( cls, pdps, config, mode=EXACT, alphaMin=ALPHAMIN ):
        "AlphaTable for the users of a SystemConfig"
        if isinstance( pdps, SampledPdp ):
            pdps = [ pdps ] * config.K
        return cls( pdps, config.M, mode, deltaF=config.deltaF,
                    sampleRate=config.sampleRate, alphaMin=alphaMin )

    @property
    def K( self ):
        return len( self.pdps )

    def alpha( self, offset ):
        "K-vector alpha_k(offset)"
        if self.mode == EXACT:
            return self.table[ :, int( offset ) % self.M ]
        return np.array( [ alphaApprox( self.deltaF, offset, Fc )
                           for Fc in self.Fc ], dtype=complex )

    def psi( self, offset ):
        """Diagonal of Psi for an offset, guarded.
           raises RefusalError if any |alpha_k| < alphaMin"""
        a = self.alpha( offset )
        low = np.abs( a ) < self.alphaMin
        if np.any( low ):
            raise RefusalError( 'alpha below %.3g at offset %d for user(s) %s'
                                % ( self.alphaMin, offset,
                                    np.flatnonzero( low ).tolist() ) )
        return a

    def __repr__( self ):
        return 'AlphaTable(%s, K=%d, M=%d)' % ( self.mode, self.K, self.M )


def _descale( soft, alpha, offset ):
    "Apply Psi^-1; offset 0 leaves soft untouched"
    if offset % alpha.M == 0:
        return soft
    return soft / alpha.psi( offset )[ :, None ]

def crossCombineMrc( Y, estimate, alpha, offset ):
    """MRC of subcarrier m with the estimate of m' = m - offset.
       Y: Q x n received columns of m
       estimate: ChannelEstimate of m'
       alpha: AlphaTable
       offset: m - m'
       returns: K x n soft symbols Psi^-1 Gamma^-1 Lambda_hat^H Y"""
    soft = estimate.mrcFilter() @ np.asarray( Y, dtype=complex )
    return _descale( soft, alpha, offset )

def slidingMmseStep( Y, estimate, alpha, deltaM, xi, noiseVar ):
    """One sliding MMSE step from source m - xi*deltaM to target m.
       Y: Q x n received columns of m
       estimate: ChannelEstimate of the source subcarrier
       alpha: AlphaTable
       deltaM: distance to the source (>= 0)
       xi: walking direction, -1 or +1
       noiseVar: noise variance
       returns: K x n soft symbols Psi^-1 Phi_source Y"""
    if estimate is None:
        raise SimError( 'no channel estimate at the source subcarrier' )
    soft = estimate.mmseFilter( noiseVar ) @ np.asarray( Y, dtype=complex )
    return _descale( soft, alpha, xi * deltaM )

def virtualPilotUpdate( Y, Xhd, noiseVar, rankTol=RANKTOL ):
    """Re-estimate a subcarrier from its own hard decisions.
       Y: Q x n received columns
       Xhd: K x n hard-decided symbols
       noiseVar: noise variance
       rankTol: relative singular value tolerance
       returns: ChannelEstimate, or None if Xhd is rank deficient"""
    Y = np.asarray( Y, dtype=complex )
    Xhd = np.asarray( Xhd, dtype=complex )
    s = np.linalg.svd( Xhd, compute_uv=False )
    if Xhd.shape[ 0 ] > Xhd.shape[ 1 ] or s[ 0 ] == 0 or (
            s[ -1 ] < rankTol * s[ 0 ] ):
        return None
    gramInv = np.linalg.inv( Xhd @ Xhd.conj().T )
    lambdaHat = Y @ Xhd.conj().T @ gramInv
    return ChannelEstimate( lambdaHat, VIRTUAL,
                            Y.shape[ 0 ] * noiseVar * gramInv )


class SlidingState( object ):
    "Estimates and anchor of one walking direction."

    def __init__( self, M, reference, estimate, xi, depth ):
        self.estimates = [ None ] * M
        self.estimates[ reference ] = estimate
        self.anchor = reference
        self.xi = xi
        self.depth = depth
        self.refused = 0

    def sources( self, m ):
        "( deltaM, estimate ) of the estimated sources within depth"
        M = len( self.estimates )
        found = []
        for dm in range( 1, self.depth + 1 ):
            est = self.estimates[ ( m - self.xi * dm ) % M ]
            if est is not None:
                found.append( ( dm, est ) )
        return found

    def anchorOffset( self, m ):
        "Offset from the anchor to m along the walking direction"
        M = len( self.estimates )
        return self.xi * ( ( self.xi * ( m - self.anchor ) ) % M )

    def update( self, m, estimate ):
        "Store a virtual-pilot estimate, or count a refusal"
        if estimate is None:
            self.refused += 1
        else:
            self.estimates[ m ] = estimate
            self.anchor = m


def _slidingPass( grid, reference, refEstimate, alpha, constellation,
                  noiseVar, xi, depth ):
    """Walk all M-1 non-reference subcarriers in direction xi.
       returns: ( soft M x K x N, SlidingState )"""
    M, N = grid.M, grid.N
    K = refEstimate.K
    state = SlidingState( M, reference, refEstimate, xi, depth )
    soft = np.zeros( ( M, K, N ), dtype=complex )
    for mDir in range( 1, M ):
        m = ( reference + xi * mDir ) % M
        Y = grid.subcarrier( m )
        sources = state.sources( m )
        if sources:
            acc = sum( slidingMmseStep( Y, est, alpha, dm, xi, noiseVar )
                       for dm, est in sources )
            Xhat = acc / len( sources )
        else:
            est = state.estimates[ state.anchor ]
            Xhat = _descale( est.mmseFilter( noiseVar ) @ Y, alpha,
                             state.anchorOffset( m ) )
        soft[ m ] = Xhat
        hard, _bits = hardDecision( Xhat, constellation )
        state.update( m, virtualPilotUpdate( Y, hard, noiseVar ) )
    if M > 1 and state.refused == M - 1:
        raise RefusalError( 'every virtual-pilot update refused in '
                            'direction %+d' % xi )
    debug( 'sliding pass %+d: %d refused\n' % ( xi, state.refused ) )
    return soft, state

def runSliding( grid, placement, book, alpha, config, constellation,
                noiseVar=None, depth=None, parallel=False ):
    """Sliding receiver with a single reference pilot subcarrier.
       grid: SpaceTimeGrid
       placement: single-subcarrier PilotPlacement
       book: PilotBook
       alpha: AlphaTable
       config: SystemConfig
       constellation: Constellation
       noiseVar: override config.noiseVar
       depth: override config.depth; 0 walks one direction only
       parallel: run the two directions on a thread pool
       returns: DetectionResult; soft output is the average of both
                directions, estimates come from the +1 direction"""
    grid.check( config )
    if placement.scheme != SINGLE:
        raise SimError( 'sliding receiver needs the single-subcarrier '
                        'pilot placement' )
    noiseVar = config.noiseVar if noiseVar is None else noiseVar
    depth = config.depth if depth is None else int( depth )
    if depth < 0:
        raise SimError( 'sliding depth must be nonnegative' )
    i = placement.reference
    refEstimate = lsEstimate( grid.pilotPart( i, placement.Np ), book,
                              noiseVar )
    directions = ( 1, ) if depth == 0 else ( -1, 1 )

    def walk( xi ):
        "One direction"
        return _slidingPass( grid, i, refEstimate, alpha, constellation,
                             noiseVar, xi, depth )

    if parallel and len( directions ) > 1:
        with ThreadPoolExecutor( max_workers=len( directions ) ) as pool:
            passes = list( pool.map( walk, directions ) )
    else:
        passes = [ walk( xi ) for xi in directions ]

    soft = sum( s for s, _ in passes ) / len( passes )
    soft[ i ] = refEstimate.mmseFilter( noiseVar ) @ grid.subcarrier( i )
    states = [ state for _, state in passes ]
    estimates = [ next( ( st.estimates[ m ] for st in reversed( states )
                          if st.estimates[ m ] is not None ), None )
                  for m in range( grid.M ) ]
    return DetectionResult( soft, constellation,
                            ~placement.mask( grid.M, grid.N ), estimates,
                            refused=sum( st.refused for st in states ),
                            scheme='sliding' )
