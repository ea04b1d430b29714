"""

    slidemimo: Monte Carlo experiments for massive MIMO-OFDM uplink
    receivers

An experiment compares receiver schemes over a sweep of one variable
(number of antennas Q, Eb/N0 or sliding depth). For every sweep point
and trial it:

    draws a Rayleigh channel from a power delay profile,
    builds the user frames of each pilot placement the schemes need,
    propagates them (with and, optionally, without noise),
    runs every scheme on the same realization and data,
    and accumulates symbol error power and bit errors.

Schemes are named in the usual name,arg,key=value form:

    conventional-mrc     LS at L pilot subcarriers, interpolation, MRC
    conventional-mmse    the same with MMSE combining
    sliding              single reference subcarrier with sliding
                         equalization (keys: depth, alpha, parallel)
    ideal-mmse           MMSE combining with the true channel

Every trial derives its random streams from ( seed, point, trial ), and
trials are accumulated in order, so results do not depend on the number
of worker processes.

Results go to a CSV file with one row per (sweep point, scheme) and a
JSON sidecar holding the full experiment description.
"""

import csv
import json
import os

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from slidemimo.log import info, warn, debug
from slidemimo.util import SimError, splitArgs, makeRng, trialSeeds, dB
from slidemimo.waveform import SystemConfig, Constellation
from slidemimo.channel import drawChannel, propagate, cirToCfr
from slidemimo.pdplib import buildPdp, loadPdpTable
from slidemimo.pilots import ( zcPilotBook, conventionalPlacement,
                               singlePlacement, buildFrames, randomBits )
from slidemimo.baseline import runConventional, runIdeal
from slidemimo.sliding import AlphaTable, EXACT, APPROX, runSliding
from slidemimo.metrics import ErrorTally, ebn0ToNoiseVar, snrToNoiseVar

# slidemimo version: should be consistent with setup.py and README
VERSION = "1.0.0"

CONVMRC = 'conventional-mrc'
CONVMMSE = 'conventional-mmse'
SLIDING = 'sliding'
IDEAL = 'ideal-mmse'
SCHEMES = ( CONVMRC, CONVMMSE, SLIDING, IDEAL )

SWEEPS = ( 'q', 'ebn0', 'depth' )

HEADER = ( 'scheme', 'Q', 'ebn0_db', 'snr_db', 'depth', 'sinr_db',
           'sir_db', 'ber', 'frames', 'failed_frames', 'seed' )

NA = 'NA'

# Noise variance of the SIR companion run
QUIET = 0.0


class Scheme( object ):
    "A receiver scheme and its options."

    def __init__( self, name, depth=None, alpha=None, parallel=False ):
        if name not in SCHEMES:
            raise SimError( 'unknown scheme %s - please specify one of %s'
                            % ( name, ', '.join( SCHEMES ) ) )
        if name != SLIDING and ( depth is not None or alpha is not None ):
            raise SimError( 'scheme %s takes no depth or alpha' % name )
        if alpha not in ( None, EXACT, APPROX ):
            raise SimError( 'unknown alpha mode %s' % alpha )
        if depth is not None and ( int( depth ) != depth or depth < 0 ):
            raise SimError( 'sliding depth must be a nonnegative integer' )
        self.name = name
        self.depth = None if depth is None else int( depth )
        self.alpha = alpha
        self.parallel = bool( parallel )

    @property
    def sliding( self ):
        return self.name == SLIDING

    def label( self, alpha=EXACT ):
        "Scheme column of the result table"
        if self.sliding and ( self.alpha or alpha ) == APPROX:
            return 'sliding-approx'
        return self.name

    def __repr__( self ):
        return 'Scheme(%s)' % self.name


def parseScheme( spec ):
    """Parse a scheme string.
       spec: 'name' or e.g. 'sliding,3,alpha=approx'
       returns: Scheme"""
    if isinstance( spec, Scheme ):
        return spec
    name, args, kwargs = splitArgs( spec )
    if len( args ) > 1:
        raise SimError( 'too many arguments in scheme %s' % spec )
    if args:
        kwargs.setdefault( 'depth', args[ 0 ] )
    unknown = set( kwargs ) - { 'depth', 'alpha', 'parallel' }
    if unknown:
        raise SimError( 'unknown option(s) %s in scheme %s'
                        % ( ', '.join( sorted( unknown ) ), spec ) )
    return Scheme( name.lower(), **kwargs )


def _convert( name, value, kind ):
    "Convert an experiment field with kind, raising SimError"
    try:
        return kind( value )
    except ( TypeError, ValueError ):
        raise SimError( 'bad value %r for %s' % ( value, name ) )


class ExperimentSpec( object ):
    "Everything needed to reproduce an experiment."

    fields = ( 'schemes', 'sweep', 'values', 'trials', 'config', 'pdp',
               'alpha', 'out', 'seed', 'workers', 'snrDb', 'ebn0Db',
               'measureSir', 'timeDomain', 'custom' )

    def __init__( self, schemes=( CONVMMSE, SLIDING ), sweep='q',
                  values=( 200, ), trials=1, config=None, pdp='etu',
                  alpha=EXACT, out=None, seed=0, workers=1, snrDb=0.0,
                  ebn0Db=None, measureSir=False, timeDomain=False,
                  custom=None ):
        """schemes: scheme strings (see parseScheme)
           sweep: 'q', 'ebn0' or 'depth'
           values: sweep values
           trials: frames per sweep point
           config: SystemConfig or dict of its fields
           pdp: PDP model name
           alpha: default alpha mode of sliding schemes
           out: CSV output path or None
           seed: master seed
           workers: worker processes
           snrDb: input SNR when the sweep is not over Eb/N0
           ebn0Db: Eb/N0 (overrides snrDb) when not sweeping it
           measureSir: also run a noiseless companion for SIR
           timeDomain: propagate through the OFDM modem
           custom: PDP table path with extra models"""
        self.schemes = [ s if isinstance( s, str ) else s.name
                         for s in schemes ]
        self.sweep = str( sweep ).lower()
        self.values = list( values )
        self.trials = _convert( 'trials', trials, int )
        if config is None:
            config = SystemConfig()
        elif isinstance( config, dict ):
            config = SystemConfig.fromDict( config )
        self.config = config
        self.pdp = pdp
        self.alpha = alpha
        self.out = out
        self.seed = _convert( 'seed', seed, int )
        self.workers = _convert( 'workers', workers, int )
        self.snrDb = _convert( 'snrDb', snrDb, float )
        self.ebn0Db = None if ebn0Db is None else _convert(
            'ebn0Db', ebn0Db, float )
        self.measureSir = bool( measureSir )
        self.timeDomain = bool( timeDomain )
        self.custom = custom
        self.check()

    def check( self ):
        "Raise SimError unless the experiment is well formed."
        if self.sweep not in SWEEPS:
            raise SimError( 'unknown sweep %s - please specify one of %s'
                            % ( self.sweep, ', '.join( SWEEPS ) ) )
        if not self.values:
            raise SimError( 'no sweep values' )
        if self.trials < 1:
            raise SimError( 'need at least one trial per point' )
        if self.workers < 1:
            raise SimError( 'need at least one worker' )
        if np.isnan( self.snrDb ):
            raise SimError( 'snrDb must be a number' )
        if self.ebn0Db is not None and np.isnan( self.ebn0Db ):
            raise SimError( 'ebn0Db must be a number' )
        if not self.schemes:
            raise SimError( 'no schemes to run' )
        if self.alpha not in ( EXACT, APPROX ):
            raise SimError( 'unknown alpha mode %s' % self.alpha )
        self.parsedSchemes()

    def parsedSchemes( self ):
        "List of Scheme objects"
        return [ parseScheme( s ) for s in self.schemes ]

    def asDict( self ):
        "JSON-friendly dict mirroring the field names"
        params = { name: getattr( self, name ) for name in self.fields }
        params[ 'config' ] = self.config.asDict()
        return params

    @classmethod
    def fromDict( cls, params ):
        "Build from a dict whose keys are field names"
        unknown = set( params ) - set( cls.fields )
        if unknown:
            raise SimError( 'unknown experiment field(s): %s'
                            % ', '.join( sorted( unknown ) ) )
        return cls( **params )

    @classmethod
    def load( cls, path ):
        "Read an experiment from a JSON file"
        try:
            with open( path ) as f:
                params = json.load( f )
        except ( IOError, ValueError ) as e:
            raise SimError( 'cannot read experiment %s: %s' % ( path, e ) )
        if not isinstance( params, dict ):
            raise SimError( 'experiment %s is not a JSON object' % path )
        return cls.fromDict( params )

    def copy( self, **overrides ):
        "Return a copy with some fields replaced"
        params = self.asDict()
        params.update( overrides )
        return self.fromDict( params )

    def points( self ):
        """Sweep points in order.
           returns: list of dicts with Q, ebn0Db, snrDb, noiseVar, depth"""
        points = []
        order = self.config.order
        for value in self.values:
            Q, depth = self.config.Q, None
            ebn0Db, snrDb = self.ebn0Db, self.snrDb
            if self.sweep == 'q':
                Q = int( value )
            elif self.sweep == 'depth':
                depth = int( value )
            if self.sweep == 'ebn0':
                ebn0Db = float( value )
            if ebn0Db is not None:
                noiseVar = ebn0ToNoiseVar( ebn0Db, order )
                snrDb = ebn0Db + float( dB( np.log2( order ) ) )
            else:
                noiseVar = snrToNoiseVar( snrDb )
                ebn0Db = snrDb - float( dB( np.log2( order ) ) )
            points.append( dict( Q=Q, ebn0Db=ebn0Db, snrDb=snrDb,
                                 noiseVar=noiseVar, depth=depth ) )
        return points

    def __repr__( self ):
        return 'ExperimentSpec(%s over %s=%s, %d trials)' % (
            ','.join( self.schemes ), self.sweep, self.values, self.trials )


def _fmt( value, fmt ):
    "Format a CSV cell"
    if value is None:
        return NA
    if isinstance( value, float ) and np.isinf( value ):
        return 'inf' if value > 0 else '-inf'
    return fmt % value


class MetricRecord( object ):
    "One result row: a scheme at a sweep point."

    def __init__( self, scheme, Q, ebn0Db, snrDb, depth, sinrDb, sirDb,
                  ber, frames, failedFrames, seed ):
        self.scheme = scheme
        self.Q = Q
        self.ebn0Db = ebn0Db
        self.snrDb = snrDb
        self.depth = depth
        self.sinrDb = sinrDb
        self.sirDb = sirDb
        self.ber = ber
        self.frames = frames
        self.failedFrames = failedFrames
        self.seed = seed

    def row( self ):
        "CSV cells in HEADER order"
        return [ self.scheme, _fmt( self.Q, '%d' ),
                 _fmt( self.ebn0Db, '%.4f' ), _fmt( self.snrDb, '%.4f' ),
                 _fmt( self.depth, '%d' ), _fmt( self.sinrDb, '%.6f' ),
                 _fmt( self.sirDb, '%.6f' ), _fmt( self.ber, '%.6e' ),
                 '%d' % self.frames, '%d' % self.failedFrames,
                 '%d' % self.seed ]

    def __repr__( self ):
        return 'MetricRecord(%s)' % ', '.join(
            '%s=%s' % pair for pair in zip( HEADER, self.row() ) )


class TrialOutcome( object ):
    "Per-scheme tallies of one trial."

    def __init__( self, point, trial ):
        self.point = point
        self.trial = trial
        # scheme index -> ( sinr ErrorTally, sir ErrorTally or None )
        self.tallies = {}
        # scheme index -> error message
        self.failures = {}


def _pdpFor( spec ):
    "PdpModel of an experiment, looking in its custom table first"
    custom = loadPdpTable( spec.custom ) if spec.custom else None
    return buildPdp( spec.pdp, custom )

def _detect( scheme, grid, cache, config, noiseVar, depth, defaultAlpha ):
    "Run one scheme on one received grid"
    if scheme.name in ( CONVMRC, CONVMMSE ):
        return runConventional( grid, cache[ 'conventional' ],
                                cache[ 'book' ], config,
                                cache[ 'constellation' ], cache[ 'L' ],
                                combiner=scheme.name.split( '-' )[ 1 ],
                                noiseVar=noiseVar )
    if scheme.name == IDEAL:
        return runIdeal( grid, cache[ 'cfr' ], cache[ 'single' ], config,
                         cache[ 'constellation' ], noiseVar=noiseVar )
    alpha = cache[ 'alpha' ][ scheme.alpha or defaultAlpha ]
    return runSliding( grid, cache[ 'single' ], cache[ 'book' ], alpha,
                       config, cache[ 'constellation' ], noiseVar=noiseVar,
                       depth=depth, parallel=scheme.parallel )

def schemeDepth( scheme, point, config ):
    "Sliding depth at a sweep point, None for other schemes"
    if not scheme.sliding:
        return None
    if point[ 'depth' ] is not None:
        return point[ 'depth' ]
    return config.depth if scheme.depth is None else scheme.depth

def runTrial( job ):
    """Simulate one frame for every scheme.
       job: ( spec, model, pointIndex, trial )
       returns: TrialOutcome"""
    spec, model, index, trial = job
    point = spec.points()[ index ]
    outcome = TrialOutcome( index, trial )
    schemes = spec.parsedSchemes()
    try:
        config = spec.config.copy( Q=point[ 'Q' ],
                                   noiseVar=point[ 'noiseVar' ] )
        seeds = trialSeeds( spec.seed, index, trial )
        pdp = model.sample( config.sampleRate )
        realization = drawChannel( pdp, config.Q, config.K,
                                   makeRng( seeds[ 'channel' ] ) )
        constellation = Constellation( config.order )
        cache = dict( book=zcPilotBook( config.Np, config.K, config.root ),
                      constellation=constellation, L=pdp.L,
                      single=singlePlacement( config ) )
        # One draw of source bits serves every placement
        bits = randomBits( cache[ 'single' ], config, constellation,
                           makeRng( seeds[ 'data' ] ) )
        placements = [ 'single' ]
        if any( s.name in ( CONVMRC, CONVMMSE ) for s in schemes ):
            cache[ 'conventional' ] = conventionalPlacement( config, pdp.L )
            placements.append( 'conventional' )
        if any( s.name == IDEAL for s in schemes ):
            cache[ 'cfr' ] = cirToCfr( realization, config.M )
        if any( s.sliding for s in schemes ):
            cache[ 'alpha' ] = { mode: AlphaTable.fromConfig( pdp, config,
                                                              mode )
                                 for mode in ( EXACT, APPROX ) }
        frames, grids, quiet = {}, {}, {}
        for name in placements:
            placement = cache[ name ]
            need = placement.dataCount( config.M, config.N ) * (
                constellation.bitsPerSymbol )
            frames[ name ] = buildFrames( placement, cache[ 'book' ],
                                          bits[ :, :need ], config,
                                          constellation )
            # Same noise samples for every placement
            grids[ name ] = propagate( frames[ name ], realization, config,
                                       makeRng( seeds[ 'noise' ] ),
                                       timeDomain=spec.timeDomain )
            if spec.measureSir:
                quiet[ name ] = propagate( frames[ name ], realization,
                                           config, timeDomain=spec.timeDomain,
                                           noiseVar=QUIET )
    except SimError as e:
        for s in range( len( schemes ) ):
            outcome.failures[ s ] = str( e )
        return outcome
    for s, scheme in enumerate( schemes ):
        name = 'conventional' if scheme.name in ( CONVMRC, CONVMMSE ) else (
            'single' )
        depth = schemeDepth( scheme, point, config )
        try:
            result = _detect( scheme, grids[ name ], cache, config,
                              config.noiseVar, depth, spec.alpha )
            sinr = ErrorTally( config.K )
            sinr.add( result, frames[ name ] )
            sir = None
            if spec.measureSir:
                quietResult = _detect( scheme, quiet[ name ], cache, config,
                                       QUIET, depth, spec.alpha )
                sir = ErrorTally( config.K )
                sir.addNoiseless( quietResult, frames[ name ], QUIET )
            outcome.tallies[ s ] = ( sinr, sir )
        except SimError as e:
            outcome.failures[ s ] = str( e )
    debug( 'trial %d/%d done, %d failure(s)\n'
           % ( index, trial, len( outcome.failures ) ) )
    return outcome


class Experiment( object ):
    "Monte Carlo comparison of receiver schemes over a sweep."

    def __init__( self, spec ):
        """spec: ExperimentSpec"""
        self.spec = spec
        self.schemes = spec.parsedSchemes()
        self.model = _pdpFor( spec )
        self.records = []
        self.failures = []

    def jobs( self, index ):
        "Trial jobs of one sweep point"
        return [ ( self.spec, self.model, index, trial )
                 for trial in range( self.spec.trials ) ]

    def runPoint( self, index, mapper=map ):
        """Run all trials of one sweep point.
           mapper: map-like callable preserving order
           returns: list of MetricRecords, one per scheme"""
        spec = self.spec
        point = spec.points()[ index ]
        K = spec.config.K
        sinr = [ ErrorTally( K ) for _ in self.schemes ]
        sir = [ ErrorTally( K ) for _ in self.schemes ]
        failed = [ 0 ] * len( self.schemes )
        for outcome in mapper( runTrial, self.jobs( index ) ):
            for s, message in sorted( outcome.failures.items() ):
                failed[ s ] += 1
                self.failures.append( ( index, outcome.trial, s, message ) )
                warn( '*** %s failed at point %d trial %d: %s\n'
                      % ( self.schemes[ s ].label( spec.alpha ), index,
                          outcome.trial, message ) )
            for s, ( a, b ) in sorted( outcome.tallies.items() ):
                sinr[ s ].merge( a )
                if b is not None:
                    sir[ s ].merge( b )
        records = []
        for s, scheme in enumerate( self.schemes ):
            records.append( MetricRecord(
                scheme.label( spec.alpha ), point[ 'Q' ], point[ 'ebn0Db' ],
                point[ 'snrDb' ],
                schemeDepth( scheme, point, spec.config ),
                sinr[ s ].ratioDb(),
                sir[ s ].ratioDb() if spec.measureSir else None,
                sinr[ s ].ber(), sinr[ s ].frames, failed[ s ], spec.seed ) )
        return records

    def run( self ):
        """Run every sweep point; write results if spec.out is set.
           returns: list of MetricRecords"""
        spec = self.spec
        self.records, self.failures = [], []
        info( '*** Running %s\n' % spec )
        info( '*** Channel model: %s\n' % self.model )
        pool = None
        mapper = map
        if spec.workers > 1:
            pool = ProcessPoolExecutor( max_workers=spec.workers )
            mapper = pool.map
        try:
            for index, value in enumerate( spec.values ):
                info( '*** Sweep point %d/%d: %s=%s\n'
                      % ( index + 1, len( spec.values ), spec.sweep,
                          value ) )
                self.records += self.runPoint( index, mapper )
        finally:
            if pool:
                pool.shutdown()
        if spec.out:
            self.write( spec.out )
        return self.records

    def write( self, path ):
        "Write the CSV table and its JSON sidecar"
        writeCsv( self.records, path )
        sidecar = os.path.splitext( path )[ 0 ] + '.json'
        with open( sidecar, 'w' ) as f:
            json.dump( dict( version=VERSION, spec=self.spec.asDict(),
                             failures=[ dict( point=p, trial=t,
                                              scheme=self.schemes[ s ].label(
                                                  self.spec.alpha ),
                                              error=m )
                                        for p, t, s, m in self.failures ] ),
                       f, indent=2, sort_keys=True )
            f.write( '\n' )
        info( '*** Results written to %s and %s\n' % ( path, sidecar ) )


def writeCsv( records, path ):
    "Write MetricRecords as CSV with the standard header"
    with open( path, 'w', newline='' ) as f:
        writer = csv.writer( f, lineterminator='\n' )
        writer.writerow( HEADER )
        for record in records:
            writer.writerow( record.row() )

def formatTable( records ):
    "Plain-text result table for the console"
    rows = [ list( HEADER ) ] + [ record.row() for record in records ]
    widths = [ max( len( row[ c ] ) for row in rows )
               for c in range( len( HEADER ) ) ]
    return '\n'.join( '  '.join( cell.rjust( w )
                                 for cell, w in zip( row, widths ) )
                      for row in rows ) + '\n'

def runExperiment( spec ):
    """Run an experiment.
       spec: ExperimentSpec (or path of a JSON experiment file)
       returns: list of MetricRecords"""
    if isinstance( spec, str ):
        spec = ExperimentSpec.load( spec )
    return Experiment( spec ).run()
