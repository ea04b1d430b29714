#!/usr/bin/env python

"""Package: slidemimo
   Monte Carlo trends of the sliding receiver against conventional
   pilots at full size (M = 1024, K = 7, ETU).
   These take minutes; runner.py -quick skips them."""

import os
import unittest

import numpy as np

from slidemimo.util import numCores
from slidemimo.experiment import ExperimentSpec, Experiment

QUICK = bool( os.environ.get( 'SLIDEMIMO_QUICK' ) )

SCHEMES = [ 'conventional-mmse', 'sliding,0', 'sliding,1', 'sliding,2',
            'sliding,3' ]

# Frames per SINR point; each frame carries 7 x 1024 x 14 symbols
TRIALS = 200

# Frames per BER point: about 400k data bits each, so >= 1e6 bits
BERTRIALS = 8

# BER level at which Eb/N0 requirements are compared
TARGET = 1e-3


def crossing( ebn0, ber, target=TARGET ):
    """Eb/N0 at which a BER curve first reaches target, interpolated
       linearly in log10(BER) between sweep points.
       returns: Eb/N0 (dB), or None if the curve never gets there"""
    logs = np.log10( np.maximum( ber, 1e-12 ) )
    goal = np.log10( target )
    for i, value in enumerate( logs ):
        if value <= goal:
            if i == 0:
                return ebn0[ 0 ]
            step = ( goal - logs[ i - 1 ] ) / ( value - logs[ i - 1 ] )
            return ebn0[ i - 1 ] + step * ( ebn0[ i ] - ebn0[ i - 1 ] )
    return None


@unittest.skipIf( QUICK, 'slow Monte Carlo test' )
class testSinrTrends( unittest.TestCase ):
    "Output SINR at Q = 200 and 0 dB input SNR"

    @classmethod
    def setUpClass( cls ):
        spec = ExperimentSpec( schemes=SCHEMES, sweep='q', values=[ 200 ],
                               trials=TRIALS, pdp='etu', snrDb=0.0,
                               seed=2024, workers=numCores() )
        records = Experiment( spec ).run()
        cls.sinr = [ r.sinrDb for r in records ]
        cls.failed = [ r.failedFrames for r in records ]

    def testNoFailures( self ):
        "Every frame is detected"
        self.assertEqual( self.failed, [ 0 ] * len( SCHEMES ) )

    def testSlidingGain( self ):
        "Depth 3 beats conventional MMSE by at least 1 dB"
        conventional, depth3 = self.sinr[ 0 ], self.sinr[ 4 ]
        self.assertGreaterEqual( depth3 - conventional, 1.0 )

    def testDepthZero( self ):
        "Depth 0 stays within 1 dB of conventional MMSE"
        self.assertLessEqual( abs( self.sinr[ 1 ] - self.sinr[ 0 ] ), 1.0 )

    def testDepthMonotone( self ):
        "SINR does not drop as the depth grows"
        for shallow, deep in zip( self.sinr[ 1:4 ], self.sinr[ 2:5 ] ):
            self.assertGreaterEqual( deep - shallow, -0.2 )


@unittest.skipIf( QUICK, 'slow Monte Carlo test' )
class testAntennaTrends( unittest.TestCase ):
    "Output SINR of the baselines as the array doubles"

    def testDoubling( self ):
        "Doubling Q from 64 to 128 adds 2 to 4 dB of SINR"
        schemes = [ 'conventional-mmse', 'ideal-mmse' ]
        spec = ExperimentSpec( schemes=schemes, sweep='q',
                               values=[ 64, 128 ], trials=20, pdp='etu',
                               snrDb=0.0, seed=64, workers=numCores() )
        records = Experiment( spec ).run()
        n = len( schemes )
        for small, large in zip( records[ :n ], records[ n: ] ):
            gain = large.sinrDb - small.sinrDb
            self.assertGreaterEqual( gain, 2.0, small.scheme )
            self.assertLessEqual( gain, 4.0, small.scheme )


@unittest.skipIf( QUICK, 'slow Monte Carlo test' )
class testBerTrends( unittest.TestCase ):
    "BER against Eb/N0 at Q = 200"

    VALUES = list( range( -13, -3 ) ) + [ 0 ]

    @classmethod
    def setUpClass( cls ):
        schemes = [ 'conventional-mmse', 'sliding,1', 'sliding,3' ]
        spec = ExperimentSpec( schemes=schemes, sweep='ebn0',
                               values=cls.VALUES, trials=BERTRIALS,
                               pdp='etu', seed=3, workers=numCores() )
        records = Experiment( spec ).run()
        n = len( schemes )
        cls.ber = { scheme: [ r.ber for r in records[ s::n ] ]
                    for s, scheme in enumerate( schemes ) }
        cls.crossings = { scheme: crossing( cls.VALUES, ber )
                          for scheme, ber in cls.ber.items() }

    def required( self, scheme ):
        "Eb/N0 at which scheme reaches the target BER"
        value = self.crossings[ scheme ]
        self.assertIsNotNone( value, '%s never reaches BER %g: %s'
                              % ( scheme, TARGET, self.ber[ scheme ] ) )
        return value

    def testConventionalFloor( self ):
        "Conventional MMSE falls below the target at high Eb/N0"
        self.assertLess( self.ber[ 'conventional-mmse' ][ -1 ], TARGET )

    def testSlidingGain( self ):
        "Depth 3 needs at least 1 dB less Eb/N0 than conventional MMSE"
        self.assertGreaterEqual( self.required( 'conventional-mmse' ) -
                                 self.required( 'sliding,3' ), 1.0 )

    def testDepthGain( self ):
        "Depth 3 needs at least 2 dB less Eb/N0 than depth 1"
        self.assertGreaterEqual( self.required( 'sliding,1' ) -
                                 self.required( 'sliding,3' ), 2.0 )


class testCrossing( unittest.TestCase ):
    "Locating the target BER on a sweep"

    def testInterpolated( self ):
        "The crossing is interpolated in log BER"
        self.assertAlmostEqual( crossing( [ 0, 1, 2 ],
                                          [ 1e-1, 1e-2, 1e-4 ] ), 1.5 )

    def testEnds( self ):
        "Curves below the target at once or never reaching it"
        self.assertEqual( crossing( [ 3, 4 ], [ 1e-4, 0.0 ] ), 3 )
        self.assertIsNone( crossing( [ 3, 4 ], [ 0.2, 0.1 ] ) )


@unittest.skipIf( QUICK, 'slow Monte Carlo test' )
class testSirTrends( unittest.TestCase ):
    "Output SIR without noise"

    def testDepthCostsSir( self ):
        "Deeper averaging lowers SIR; conventional pilots are exact"
        spec = ExperimentSpec( schemes=[ 'conventional-mmse', 'sliding,1',
                                         'sliding,3' ],
                               sweep='q', values=[ 200 ], trials=4,
                               pdp='etu', snrDb=float( 'inf' ),
                               measureSir=True, seed=7,
                               workers=numCores() )
        records = Experiment( spec ).run()
        conventional, depth1, depth3 = [ r.sirDb for r in records ]
        self.assertLessEqual( depth3, depth1 )
        self.assertTrue( np.isposinf( conventional ) or conventional > 60 )


if __name__ == '__main__':
    unittest.main()
