#!/usr/bin/env python

"""Package: slidemimo
   Test least-squares estimation, CFR interpolation and combining."""

import unittest

import numpy as np

from slidemimo.util import SimError
from slidemimo.waveform import SystemConfig, Constellation, SpaceTimeGrid
from slidemimo.channel import SampledPdp, drawChannel, cirToCfr, propagate
from slidemimo.pdplib import ETU
from slidemimo.pilots import ( zcPilotBook, conventionalPilotIndices,
                               conventionalPlacement, singlePlacement,
                               buildFrames, randomBits )
from slidemimo.baseline import ( ChannelEstimate, lsEstimate,
                                 reconstructCfr, mrcCombine, mmseCombine,
                                 runConventional, runIdeal, PILOT )
from slidemimo.metrics import symbolErrorPower


def randomMatrix( rng, shape ):
    "Complex Gaussian matrix with unit-variance entries"
    return ( rng.standard_normal( shape ) +
             1j * rng.standard_normal( shape ) ) / np.sqrt( 2 )


class testEstimation( unittest.TestCase ):
    "Least-squares estimation and interpolation"

    def testNoiselessLs( self ):
        "Noiseless LS returns the channel exactly"
        rng = np.random.default_rng( 0 )
        book = zcPilotBook( 7, 7 )
        lam = randomMatrix( rng, ( 16, 7 ) )
        est = lsEstimate( lam @ book.matrix, book )
        self.assertTrue( np.allclose( est.lambdaHat, lam, atol=1e-12 ) )
        self.assertEqual( est.source, PILOT )
        self.assertFalse( np.any( est.noiseMitigation ) )

    def testNoiseMitigation( self ):
        "The pilot noise term is (Q sigma^2 / Np) I for a ZC book"
        book = zcPilotBook( 7, 5 )
        est = lsEstimate( np.zeros( ( 4, 7 ) ), book, noiseVar=0.5 )
        self.assertTrue( np.allclose( est.noiseMitigation,
                                      4 * 0.5 / 7 * np.eye( 5 ) ) )

    def testPilotColumns( self ):
        "The received block must have Np columns"
        self.assertRaises( SimError, lsEstimate, np.zeros( ( 4, 6 ) ),
                           zcPilotBook( 7, 3 ) )

    def testReconstruct( self ):
        "Noiseless pilots at L subcarriers recover the full ETU CFR"
        M = 1024
        pdp = ETU.sample( M * 15e3 )
        indices = conventionalPilotIndices( M, pdp.L )
        for seed in range( 20 ):
            cfr = cirToCfr( drawChannel( pdp, 2, 2, seed ), M )
            pilots = [ ChannelEstimate( cfr.subcarrier( m ) )
                       for m in indices ]
            estimates = reconstructCfr( pilots, indices, M, pdp.L )
            lam = np.stack( [ e.lambdaHat for e in estimates ] )
            self.assertTrue( np.allclose( lam, cfr.lam, rtol=0, atol=1e-8 ) )

    def testReconstructCount( self ):
        "Exactly L pilot estimates are needed"
        est = ChannelEstimate( np.ones( ( 2, 2 ) ) )
        self.assertRaises( SimError, reconstructCfr, [ est ] * 3,
                           [ 0, 4, 8, 12 ], 16, 4 )


class testEstimatorStatistics( unittest.TestCase ):
    "Noise statistics of the pilot estimate"

    Q, K, noiseVar = 4, 3, 0.5

    def draws( self, count, seed ):
        """Channel, pilot book and count noisy LS estimates.
           returns: lam, book, list of ChannelEstimates"""
        rng = np.random.default_rng( seed )
        book = zcPilotBook( 7, self.K )
        lam = randomMatrix( rng, ( self.Q, self.K ) )
        clean = lam @ book.matrix
        noise = np.sqrt( self.noiseVar ) * randomMatrix(
            rng, ( count, self.Q, book.Np ) )
        return lam, book, [ lsEstimate( clean + w, book, self.noiseVar )
                            for w in noise ]

    def testUnbiased( self ):
        "LS errors have zero mean and variance sigma^2 / Np"
        count = 20000
        lam, book, estimates = self.draws( count, 0 )
        errors = np.stack( [ e.lambdaHat for e in estimates ] ) - lam
        variance = self.noiseVar / book.Np
        bound = 5 * np.sqrt( variance / count )
        self.assertTrue( np.all( np.abs( errors.mean( axis=0 ) ) <= bound ) )
        perEntry = np.mean( np.abs( errors ) ** 2, axis=0 )
        self.assertTrue( np.allclose( perEntry, variance, rtol=0.05 ) )

    def testGramCorrection( self ):
        "Subtracting Q sigma^2 / Np removes the bias of the Gram diagonal"
        count = 4000
        lam, book, estimates = self.draws( count, 1 )
        norms = np.sum( np.abs( lam ) ** 2, axis=0 )
        v = self.noiseVar / book.Np
        corrected = np.mean( [ np.real( np.diag( e.gram() ) )
                              for e in estimates ], axis=0 )
        raw = np.mean( [ np.sum( np.abs( e.lambdaHat ) ** 2, axis=0 )
                         for e in estimates ], axis=0 )
        tolerance = 5 * np.sqrt( ( 2 * v * norms + self.Q * v ** 2 )
                                 / count )
        self.assertTrue( np.all( np.abs( corrected - norms ) <= tolerance ) )
        self.assertTrue( np.allclose( raw - corrected, self.Q * v ) )
        self.assertTrue( np.all( raw - norms > tolerance ) )



class testCombining( unittest.TestCase ):
    "MRC and MMSE combining"

    def testMrcSingleUser( self ):
        "MRC recovers a single user exactly without noise"
        rng = np.random.default_rng( 1 )
        lam = randomMatrix( rng, ( 8, 1 ) )
        x = randomMatrix( rng, ( 1, 5 ) )
        est = ChannelEstimate( lam )
        self.assertTrue( np.allclose( mrcCombine( lam @ x, est ), x ) )

    def testMrcFloor( self ):
        "A zero estimate gives zero output, not NaN"
        est = ChannelEstimate( np.zeros( ( 4, 2 ) ) )
        soft = mrcCombine( np.ones( ( 4, 3 ) ), est )
        self.assertFalse( np.any( soft ) )

    def testMmseNoiseless( self ):
        "MMSE with zero noise inverts a full-rank channel"
        rng = np.random.default_rng( 2 )
        lam = randomMatrix( rng, ( 8, 3 ) )
        x = randomMatrix( rng, ( 3, 5 ) )
        est = ChannelEstimate( lam )
        self.assertTrue( np.allclose( mmseCombine( lam @ x, est, 0.0 ), x ) )

    def testMmseCache( self ):
        "The MMSE filter is computed once per noise variance"
        rng = np.random.default_rng( 3 )
        est = ChannelEstimate( randomMatrix( rng, ( 8, 3 ) ) )
        self.assertIs( est.mmseFilter( 0.5 ), est.mmseFilter( 0.5 ) )
        self.assertIsNot( est.mmseFilter( 0.5 ), est.mmseFilter( 1.0 ) )

    def testMmseShrinks( self ):
        "Noise variance shrinks the MMSE output"
        rng = np.random.default_rng( 4 )
        lam = randomMatrix( rng, ( 8, 2 ) )
        y = lam @ np.ones( ( 2, 1 ) )
        est = ChannelEstimate( lam )
        quiet = np.linalg.norm( mmseCombine( y, est, 0.0 ) )
        noisy = np.linalg.norm( mmseCombine( y, est, 10.0 ) )
        self.assertLess( noisy, quiet )

    def testMmseScalar( self ):
        "One user on one antenna gets the scalar Wiener gain"
        h, noiseVar = 0.6 - 0.8j, 0.25
        est = ChannelEstimate( [ [ h ] ] )
        expected = np.conj( h ) / ( abs( h ) ** 2 + noiseVar )
        self.assertAlmostEqual( est.mmseFilter( noiseVar )[ 0, 0 ],
                                expected )
        y = h * 2.0 + 0.1j
        soft = mmseCombine( [ [ y ] ], est, noiseVar )
        self.assertAlmostEqual( soft[ 0, 0 ], expected * y )

    def testMmseTextbook( self ):
        "The MMSE combiner matches Lambda^H (Lambda Lambda^H + s I)^-1"
        rng = np.random.default_rng( 6 )
        for _ in range( 5 ):
            lam = randomMatrix( rng, ( 4, 2 ) )
            noiseVar = rng.uniform( 0.05, 2.0 )
            textbook = lam.conj().T @ np.linalg.inv(
                lam @ lam.conj().T + noiseVar * np.eye( 4 ) )
            self.assertTrue( np.allclose(
                ChannelEstimate( lam ).mmseFilter( noiseVar ), textbook,
                rtol=0, atol=1e-10 ) )

    def testMmseMitigated( self ):
        "The noise term is removed from the Gram matrix before inversion"
        rng = np.random.default_rng( 7 )
        lam = randomMatrix( rng, ( 4, 2 ) )
        B = np.diag( [ 0.3, 0.1 ] ).astype( complex )
        expected = np.linalg.inv( lam.conj().T @ lam - B +
                                  0.5 * np.eye( 2 ) ) @ lam.conj().T
        self.assertTrue( np.allclose(
            ChannelEstimate( lam, noiseMitigation=B ).mmseFilter( 0.5 ),
            expected, rtol=0, atol=1e-10 ) )

    def testMmseTowardsMrc( self ):
        "With growing noise the MMSE rows turn towards the MRC rows"
        rng = np.random.default_rng( 8 )
        est = ChannelEstimate( randomMatrix( rng, ( 8, 3 ) ) )
        mrc = est.mrcFilter()

        def cosines( noiseVar ):
            "Per-user cosine similarity of MMSE and MRC rows"
            mmse = est.mmseFilter( noiseVar )
            inner = np.abs( np.sum( mmse.conj() * mrc, axis=1 ) )
            return inner / ( np.linalg.norm( mmse, axis=1 ) *
                             np.linalg.norm( mrc, axis=1 ) )

        self.assertTrue( np.all( cosines( 1e6 ) >= 1 - 1e-6 ) )
        self.assertTrue( np.all( cosines( 1e6 ) >= cosines( 1e-2 ) ) )

    def testEstimateShape( self ):
        "Estimates are Q x K matrices"
        self.assertRaises( SimError, ChannelEstimate, np.ones( 3 ) )


class testReceivers( unittest.TestCase ):
    "Conventional and ideal receivers on a noiseless link"

    config = SystemConfig( M=64, Mcp=8, K=2, Q=8, Np=3, Nd=2, noiseVar=0.0 )

    def link( self, placement, seed=0 ):
        "Frames and received grid for a three-tap channel"
        config = self.config
        rng = np.random.default_rng( seed )
        c = Constellation( config.order )
        book = zcPilotBook( config.Np, config.K )
        pdp = SampledPdp( [ 0.5, 0.3, 0.2 ] )
        realization = drawChannel( pdp, config.Q, config.K, rng )
        bits = randomBits( placement, config, c, rng )
        frames = buildFrames( placement, book, bits, config, c )
        grid = propagate( frames, realization, config )
        return c, book, realization, frames, grid

    def testConventional( self ):
        "Conventional MMSE detects every bit without noise"
        placement = conventionalPlacement( self.config, 3 )
        c, book, _r, frames, grid = self.link( placement )
        result = runConventional( grid, placement, book, self.config, c, 3 )
        for k, frame in enumerate( frames ):
            self.assertTrue( np.array_equal( result.userBits( k ),
                                             frame.bits ) )
        errors, counts = symbolErrorPower(
            [ result.userSoft( k ) for k in range( 2 ) ],
            [ f.dataSymbols() for f in frames ] )
        self.assertTrue( np.all( errors < 1e-12 ) )
        self.assertEqual( counts.tolist(), [ 64 * 5 - 9 ] * 2 )

    def testConventionalMrc( self ):
        "The MRC variant runs and labels its result"
        placement = conventionalPlacement( self.config, 3 )
        c, book, _r, _frames, grid = self.link( placement )
        result = runConventional( grid, placement, book, self.config, c, 3,
                                  combiner='mrc' )
        self.assertEqual( result.scheme, 'conventional-mrc' )
        self.assertEqual( result.soft.shape, ( 64, 2, 5 ) )
        self.assertRaises( SimError, runConventional, grid, placement, book,
                           self.config, c, 3, combiner='zf' )

    def testWrongPlacement( self ):
        "The conventional receiver needs the conventional placement"
        placement = singlePlacement( self.config )
        c, book, _r, _frames, grid = self.link( placement )
        self.assertRaises( SimError, runConventional, grid, placement, book,
                           self.config, c, 3 )

    def testWrongGrid( self ):
        "Receivers refuse a grid that does not match the config"
        placement = conventionalPlacement( self.config, 3 )
        c, book, realization, _frames, grid = self.link( placement )
        wide = self.config.copy( Q=16 )
        self.assertRaises( SimError, runConventional, grid, placement, book,
                           wide, c, 3 )
        single = singlePlacement( self.config )
        self.assertRaises( SimError, runIdeal, grid,
                           cirToCfr( realization, 64 ), single, wide, c )

    def testIdeal( self ):
        "Ideal MMSE with the true CFR detects every bit"
        placement = singlePlacement( self.config )
        c, _book, realization, frames, grid = self.link( placement, 5 )
        cfr = cirToCfr( realization, self.config.M )
        result = runIdeal( grid, cfr, placement, self.config, c )
        for k, frame in enumerate( frames ):
            self.assertTrue( np.array_equal( result.userBits( k ),
                                             frame.bits ) )

    def testZeroGrid( self ):
        "Combining an all-zero grid gives zero soft output"
        placement = singlePlacement( self.config )
        c, _book, realization, _frames, _grid = self.link( placement )
        grid = SpaceTimeGrid( np.zeros( ( 64, 8, 5 ) ) )
        result = runIdeal( grid, cirToCfr( realization, 64 ), placement,
                           self.config, c )
        self.assertFalse( np.any( result.soft ) )


if __name__ == '__main__':
    unittest.main()
