"""
metrics.py: SINR, SIR and BER accounting

SINR_k = E|x|^2 / E|x_hat_k - x_k|^2 over the data REs of user k, with
unit symbol energy. Per-user ratios are averaged in linear scale before
conversion to dB. SIR is the same estimator applied to a noiseless run.

ErrorTally accumulates the same error power and bit error counts over
trials, so that a sweep point reports one ratio per scheme.
"""

import numpy as np

from slidemimo.util import SimError, dB
from slidemimo.waveform import Constellation

# Error power at or below SENTINEL * signal power reports +inf dB
SENTINEL = 1e-20


def _ratio( signal, errorPower ):
    "signal / errorPower, inf when the error vanishes"
    errorPower = np.asarray( errorPower, dtype=float )
    with np.errstate( divide='ignore' ):
        return np.where( errorPower <= SENTINEL * signal, np.inf,
                         signal / errorPower )

def symbolErrorPower( soft, truth ):
    """Per-user squared-error sums.
       soft: K x n soft symbol estimates
       truth: K x n transmitted symbols
       returns: ( errors[K], counts[K] )"""
    soft = np.atleast_2d( np.asarray( soft, dtype=complex ) )
    truth = np.atleast_2d( np.asarray( truth, dtype=complex ) )
    if soft.shape != truth.shape:
        raise SimError( 'soft %s and truth %s differ in shape'
                        % ( soft.shape, truth.shape ) )
    errors = np.sum( np.abs( soft - truth ) ** 2, axis=1 )
    counts = np.full( soft.shape[ 0 ], soft.shape[ 1 ], dtype=np.int64 )
    return errors, counts

def measureSinr( soft, truth, signal=1.0 ):
    """Per-user output SINR.
       soft: K x n soft symbol estimates
       truth: K x n transmitted symbols
       signal: mean symbol energy (1 for unit-power QAM)
       returns: K-vector in dB; +inf when the error power vanishes"""
    errors, counts = symbolErrorPower( soft, truth )
    return dB( _ratio( signal, errors / counts ) )

def checkNoiseless( noiseVar ):
    "Raise SimError unless noiseVar describes a noiseless run"
    if noiseVar is None or noiseVar > 0:
        raise SimError( 'SIR needs a noiseless run (noiseVar=%s)'
                        % noiseVar )

def measureSir( soft, truth, noiseVar, signal=1.0 ):
    """Per-user output SIR of a noiseless run.
       noiseVar: noise variance of the run; must be 0"""
    checkNoiseless( noiseVar )
    return measureSinr( soft, truth, signal )

def bitErrors( decided, truth ):
    """Number of differing bits.
       decided: decided bits
       truth: transmitted bits, same length"""
    decided = np.asarray( decided ).ravel()
    truth = np.asarray( truth ).ravel()
    if decided.size != truth.size:
        raise SimError( 'bit streams differ in length (%d vs %d)'
                        % ( decided.size, truth.size ) )
    if truth.size == 0:
        raise SimError( 'no bits to compare' )
    return int( np.count_nonzero( decided != truth ) )

def measureBer( decided, truth ):
    """Bit error ratio.
       decided: decided bits
       truth: transmitted bits, same length
       returns: Hamming distance / number of bits"""
    return float( bitErrors( decided, truth ) ) / np.asarray( truth ).size

def ebn0ToNoiseVar( ebn0Db, order ):
    """Noise variance for an Eb/N0 at unit symbol energy.
       ebn0Db: Eb/N0 in dB (inf for a noiseless run)
       order: QAM order
       returns: 1 / ( log2(order) 10^(ebn0Db/10) )"""
    Constellation.checkOrder( order )
    if np.isinf( ebn0Db ) and ebn0Db > 0:
        return 0.0
    return 1.0 / ( np.log2( order ) * 10.0 ** ( ebn0Db / 10.0 ) )

def snrToNoiseVar( snrDb ):
    "Noise variance for an input SNR Es/sigma^2 in dB"
    if np.isinf( snrDb ) and snrDb > 0:
        return 0.0
    return 10.0 ** ( -snrDb / 10.0 )


def _userSymbols( result, frames ):
    "K x n soft and transmitted data symbols of a detected frame"
    soft = np.stack( [ result.userSoft( k ) for k in range( len( frames ) ) ] )
    truth = np.stack( [ f.dataSymbols() for f in frames ] )
    return soft, truth


class ErrorTally( object ):
    "Running sums of symbol error power and bit errors over trials."

    def __init__( self, K ):
        self.K = K
        self.errors = np.zeros( K )
        self.counts = np.zeros( K, dtype=np.int64 )
        self.bitErrors = 0
        self.bits = 0
        self.frames = 0

    def add( self, result, frames ):
        """Account one detected frame.
           result: DetectionResult
           frames: the K transmitted UserFrames"""
        soft, truth = _userSymbols( result, frames )
        self.addErrorPower( *symbolErrorPower( soft, truth ) )
        for k, f in enumerate( frames ):
            self.bitErrors += bitErrors( result.userBits( k ), f.bits )
            self.bits += f.bits.size

    def addNoiseless( self, result, frames, noiseVar ):
        """Account error power of a noiseless companion run.
           noiseVar: noise variance the run was made with; must be 0"""
        checkNoiseless( noiseVar )
        self.addErrorPower( *symbolErrorPower(
            *_userSymbols( result, frames ) ) )

    def addErrorPower( self, errors, counts ):
        "Account per-user error power sums of one frame"
        self.errors += errors
        self.counts += counts
        self.frames += 1

    def merge( self, other ):
        "Add the sums of another tally"
        self.errors += other.errors
        self.counts += other.counts
        self.bitErrors += other.bitErrors
        self.bits += other.bits
        self.frames += other.frames

    def ratioDb( self, signal=1.0 ):
        """Per-user ratios averaged in linear scale, in dB.
           returns: None before any frame was added"""
        if not self.frames or not np.all( self.counts ):
            return None
        ratios = _ratio( signal, self.errors / self.counts )
        return float( dB( np.mean( ratios ) ) )

    def ber( self ):
        "Bit error ratio, or None without bits"
        return self.bitErrors / self.bits if self.bits else None

    def __repr__( self ):
        return 'ErrorTally(frames=%d, bits=%d)' % ( self.frames, self.bits )
