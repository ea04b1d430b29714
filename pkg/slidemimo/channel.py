"""
channel.py: multipath channel models and propagation

PdpModel: power delay profile as a tap table (delays in seconds, powers
    in dB)

SampledPdp: PDP on the sample grid, normalized to unit total power

ChannelRealization: Q x K x L impulse responses h_{q,k}[l]

CfrTensor: M x Q x K frequency responses lambda_{q,k}[m]

propagate() has two paths. The frequency-domain path applies
Y_m = Lambda_m X_m + W_m directly; the time-domain path modulates,
convolves, adds noise and demodulates, and serves as the oracle for
the first.
"""

import numpy as np
from scipy.signal import lfilter

from slidemimo.log import debug
from slidemimo.util import SimError, makeRng
from slidemimo.waveform import ( SpaceTimeGrid, UserFrame, ofdmModulate,
                                 ofdmDemodulate, assembleSpaceTime )

# Taps within this fraction of a sample of the next grid point snap to it
SNAP = 1e-6


class PdpModel( object ):
    "Tapped delay line power delay profile."

    def __init__( self, name, delays, powersDb ):
        """name: label
           delays: tap delays in seconds, strictly increasing, >= 0
           powersDb: relative tap powers in dB"""
        self.name = name
        self.delays = np.asarray( delays, dtype=float ).ravel()
        self.powersDb = np.asarray( powersDb, dtype=float ).ravel()
        if self.delays.size == 0:
            raise SimError( 'PDP %s has no taps' % name )
        if self.delays.size != self.powersDb.size:
            raise SimError( 'PDP %s: %d delays but %d powers'
                            % ( name, self.delays.size, self.powersDb.size ) )
        if self.delays[ 0 ] < 0 or np.any( np.diff( self.delays ) <= 0 ):
            raise SimError( 'PDP %s: delays must be nonnegative and '
                            'strictly increasing' % name )

    @property
    def maxDelay( self ):
        "Delay of the last tap (s)"
        return float( self.delays[ -1 ] )

    def sample( self, sampleRate ):
        "Shorthand for samplePdp( self, sampleRate )"
        return samplePdp( self, sampleRate )

    def __repr__( self ):
        return 'PdpModel(%s, %d taps, %.0f ns)' % (
            self.name, self.delays.size, self.maxDelay * 1e9 )


class SampledPdp( object ):
    "Normalized PDP on the sample grid: rho[l], sum(rho) = 1."

    def __init__( self, rho, name=None ):
        rho = np.asarray( rho, dtype=float ).ravel()
        if rho.size == 0 or np.any( rho < 0 ) or rho.sum() <= 0:
            raise SimError( 'sampled PDP needs nonnegative taps with '
                            'positive total power' )
        nonzero = np.flatnonzero( rho )
        self.rho = rho[ :nonzero[ -1 ] + 1 ] / rho.sum()
        self.name = name

    @property
    def L( self ):
        "Channel length in samples"
        return self.rho.size

    def padded( self, M ):
        "rho zero-padded to length M"
        if self.L > M:
            raise SimError( 'PDP of length %d exceeds M=%d' % ( self.L, M ) )
        out = np.zeros( M )
        out[ :self.L ] = self.rho
        return out

    def __repr__( self ):
        return 'SampledPdp(%s, L=%d)' % ( self.name, self.L )


def samplePdp( model, sampleRate ):
    """Place a tap table on the sample grid.
       model: PdpModel
       sampleRate: fs in Hz
       returns: SampledPdp
       Each tap lands on the sample at or before its delay; taps sharing
       a sample add their linear powers."""
    if sampleRate <= 0:
        raise SimError( 'sample rate must be positive' )
    index = np.floor( model.delays * sampleRate + SNAP ).astype( int )
    rho = np.zeros( index[ -1 ] + 1 )
    np.add.at( rho, index, 10.0 ** ( model.powersDb / 10 ) )
    pdp = SampledPdp( rho, name=model.name )
    debug( 'sampled %s at %.3f MHz: L=%d\n'
           % ( model.name, sampleRate / 1e6, pdp.L ) )
    return pdp


class ChannelRealization( object ):
    "Impulse responses of every (antenna, user) pair."

    def __init__( self, taps, pdps ):
        """taps: Q x K x L complex tensor
           pdps: K SampledPdp, one per user"""
        self.taps = np.asarray( taps, dtype=complex )
        self.pdps = list( pdps )
        if self.taps.ndim != 3 or self.taps.shape[ 1 ] != len( self.pdps ):
            raise SimError( 'taps must be Q x K x L with one PDP per user' )

    @property
    def Q( self ):
        return self.taps.shape[ 0 ]

    @property
    def K( self ):
        return self.taps.shape[ 1 ]

    @property
    def L( self ):
        return self.taps.shape[ 2 ]


def drawChannel( pdps, Q, K, rng ):
    """Draw Rayleigh-faded impulse responses.
       pdps: one SampledPdp for all users, or a list of K
       Q: number of antennas
       K: number of users
       rng: Generator or seed; every (antenna, user) pair draws from its
            own spawned substream, in q-major order
       returns: ChannelRealization; tap l of user k ~ CN(0, rho_k[l])"""
    if isinstance( pdps, SampledPdp ):
        pdps = [ pdps ] * K
    if len( pdps ) != K:
        raise SimError( 'need %d user PDPs, got %d' % ( K, len( pdps ) ) )
    L = max( pdp.L for pdp in pdps )
    taps = np.zeros( ( Q, K, L ), dtype=complex )
    streams = makeRng( rng ).spawn( Q * K )
    for q in range( Q ):
        for k, pdp in enumerate( pdps ):
            z = streams[ q * K + k ].standard_normal( ( 2, pdp.L ) )
            taps[ q, k, :pdp.L ] = ( np.sqrt( pdp.rho / 2 ) *
                                     ( z[ 0 ] + 1j * z[ 1 ] ) )
    return ChannelRealization( taps, pdps )


class CfrTensor( object ):
    "Channel frequency responses, M x Q x K."

    def __init__( self, lam ):
        self.lam = np.asarray( lam, dtype=complex )

    @property
    def M( self ):
        return self.lam.shape[ 0 ]

    def subcarrier( self, m ):
        "Q x K matrix Lambda_m"
        return self.lam[ m ]


def cirToCfr( realization, M ):
    """Frequency response of every (antenna, user) pair.
       realization: ChannelRealization (or Q x K x L tap array)
       M: number of subcarriers
       returns: CfrTensor, lambda[m] = sum_l h[l] exp(-j 2 pi m l / M)"""
    taps = ( realization.taps if isinstance( realization, ChannelRealization )
             else np.asarray( realization, dtype=complex ) )
    if taps.shape[ -1 ] > M:
        raise SimError( 'channel length %d exceeds M=%d'
                        % ( taps.shape[ -1 ], M ) )
    lam = np.fft.fft( taps, n=M, axis=-1 )
    return CfrTensor( np.moveaxis( lam, -1, 0 ) )


def awgn( shape, noiseVar, rng ):
    "Circularly-symmetric complex Gaussian noise of variance noiseVar"
    if noiseVar == 0:
        return np.zeros( shape, dtype=complex )
    z = rng.standard_normal( ( 2, ) + tuple( shape ) )
    return np.sqrt( noiseVar / 2 ) * ( z[ 0 ] + 1j * z[ 1 ] )


def _frameStack( frames ):
    "M x K x N stack of user grids"
    grids = [ f.symbols if isinstance( f, UserFrame ) else np.asarray( f )
              for f in frames ]
    return np.stack( grids, axis=1 )

def propagate( frames, realization, config, rng=None, timeDomain=False,
               noiseVar=None ):
    """Pass K user frames through the channel and add noise.
       frames: K UserFrames (or M x N arrays)
       realization: ChannelRealization
       config: SystemConfig
       rng: Generator or seed for the noise
       timeDomain: use the modulate/convolve/demodulate oracle path
       noiseVar: override config.noiseVar
       returns: SpaceTimeGrid"""
    noiseVar = config.noiseVar if noiseVar is None else noiseVar
    rng = makeRng( rng )
    config.checkChannelLength( realization.L )
    if len( frames ) != realization.K:
        raise SimError( '%d frames for %d users'
                        % ( len( frames ), realization.K ) )
    if timeDomain:
        return _propagateTime( frames, realization, config, rng, noiseVar )
    X = _frameStack( frames )
    lam = cirToCfr( realization, config.M ).lam
    Y = np.matmul( lam, X )
    Y += awgn( Y.shape, noiseVar, rng )
    return SpaceTimeGrid( Y )

def _propagateTime( frames, realization, config, rng, noiseVar ):
    "Time-domain path: linear convolution, CP absorbs the tail."
    signals = [ ofdmModulate( f, config ) for f in frames ]
    grids = []
    for q in range( realization.Q ):
        rx = np.zeros( signals[ 0 ].size, dtype=complex )
        for k, s in enumerate( signals ):
            rx += lfilter( realization.taps[ q, k ], [ 1.0 ], s )
        rx += awgn( rx.shape, noiseVar, rng )
        grids.append( ofdmDemodulate( rx, config ) )
    return assembleSpaceTime( grids )


def coherenceBandwidth( pdp, sampleRate ):
    """Coherence bandwidth Fc = 1 / maximum delay spread.
       pdp: SampledPdp; the delay spread is (L-1)/fs
       sampleRate: fs in Hz
       returns: Fc in Hz, or inf for a single-tap channel"""
    if pdp.L == 1:
        return float( 'inf' )
    return sampleRate / ( pdp.L - 1 )
