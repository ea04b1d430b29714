"""
Command-line interface for slidemimo.

    slidemimo run --sweep q --values 64,128,256 --trials 50 \\
        --scheme conventional-mmse --scheme sliding,depth=3

runs a Monte Carlo sweep and prints (and optionally writes) the result
table;

    slidemimo pdp etu

describes a power delay profile: its taps, sampled length, coherence
bandwidth and frequency correlation at small offsets.

Without a subcommand, slidemimo starts an interactive console:

slidemimo> set sweep ebn0
slidemimo> set values 0,2,4,6
slidemimo> set Q 64
slidemimo> run

Experiment files are JSON documents whose keys are the ExperimentSpec
field names; command-line flags override them.
"""

import argparse
import sys
import time

from cmd import Cmd

import numpy as np

from slidemimo.log import ( info, output, error, setLogLevel, addLogFile,
                            closeLogFiles, LEVELS )
from slidemimo.util import SimError, makeNumeric, splitValues, fmtDb
from slidemimo.waveform import SystemConfig
from slidemimo.channel import coherenceBandwidth
from slidemimo.pdplib import PDPS, buildPdp, loadPdpTable
from slidemimo.sliding import AlphaTable, EXACT, APPROX
from slidemimo.experiment import ( ExperimentSpec, Experiment, SWEEPS,
                                   formatTable, VERSION )

# Offsets shown by describePdp
OFFSETS = ( 1, 2, 3, 5, 10, 20 )


def describePdp( name, custom=None, config=None ):
    """Text description of a PDP model.
       name: model name
       custom: extra models (dict)
       config: SystemConfig for the sample grid (default settings)"""
    config = config or SystemConfig()
    model = buildPdp( name, custom )
    pdp = model.sample( config.sampleRate )
    Fc = coherenceBandwidth( pdp, config.sampleRate )
    lines = [ '%s: %d taps, max delay %.0f ns'
              % ( model.name, model.delays.size, model.maxDelay * 1e9 ) ]
    for delay, power in zip( model.delays, model.powersDb ):
        lines.append( '  %8.0f ns  %6.1f dB' % ( delay * 1e9, power ) )
    FcText = 'inf' if np.isinf( Fc ) else '%.1f kHz' % ( Fc / 1e3 )
    lines.append( 'sampled at %.2f MHz: L=%d, Fc=%s'
                  % ( config.sampleRate / 1e6, pdp.L, FcText ) )
    exact = AlphaTable.fromConfig( pdp, config, EXACT )
    approx = AlphaTable.fromConfig( pdp, config, APPROX, alphaMin=0 )
    lines.append( '  offset  |alpha| exact  |alpha| approx' )
    for offset in OFFSETS:
        a = abs( exact.alpha( offset )[ 0 ] )
        try:
            b = '%14.5f' % abs( approx.alpha( offset )[ 0 ] )
        except SimError:
            b = '%14s' % 'beyond Fc'
        lines.append( '  %6d  %13.5f  %s' % ( offset, a, b ) )
    return '\n'.join( lines ) + '\n'


def _convert( key, value ):
    "Convert a console/flag value for an ExperimentSpec field"
    if key == 'schemes':
        return value.split()
    if key == 'values':
        return splitValues( value )
    if key in ( 'measureSir', 'timeDomain' ):
        return value.lower() in ( '1', 'true', 'yes', 'on' )
    if value.lower() in ( 'none', 'null' ):
        return None
    return makeNumeric( value )

def updateSpec( spec, key, value ):
    """Return a copy of spec with one field set from a string.
       key: ExperimentSpec or SystemConfig field name"""
    if key in SystemConfig.fields:
        return spec.copy( config=spec.config.copy(
            **{ key: makeNumeric( value ) } ).asDict() )
    if key not in ExperimentSpec.fields or key == 'config':
        raise SimError( 'unknown setting %s' % key )
    return spec.copy( **{ key: _convert( key, value ) } )


def runSpec( spec ):
    "Run an experiment and print its table"
    start = time.time()
    records = Experiment( spec ).run()
    output( formatTable( records ) )
    info( 'completed in %0.3f seconds\n' % ( time.time() - start ) )
    return records


class Console( Cmd ):
    "Interactive console for setting up and running experiments."

    prompt = 'slidemimo> '

    def __init__( self, spec=None, stdin=sys.stdin, **kwargs ):
        """spec: starting ExperimentSpec
           stdin: standard input for the console"""
        self.spec = spec or ExperimentSpec()
        self.records = []
        self.locals = {}
        self.inputFile = None
        Cmd.__init__( self, stdin=stdin, **kwargs )
        if stdin is not sys.stdin:
            self.use_rawinput = False

    def run( self ):
        "Run our cmdloop(), catching KeyboardInterrupt"
        info( '*** Starting console (slidemimo %s):\n' % VERSION )
        while True:
            try:
                self.cmdloop()
                break
            except KeyboardInterrupt:
                output( '\nInterrupt\n' )

    def emptyline( self ):
        "Don't repeat last command when you hit return."
        pass

    def precmd( self, line ):
        "allow for comments in the console"
        if '#' in line:
            line = line.split( '#' )[ 0 ]
        return line

    def getLocals( self ):
        "Local variable bindings for py command"
        self.locals.update( spec=self.spec, records=self.records, np=np )
        return self.locals

    def do_pdp( self, line ):
        """Describe a PDP model, or list them.
           Usage: pdp [name]"""
        custom = loadPdpTable( self.spec.custom ) if self.spec.custom else {}
        args = line.split()
        try:
            if not args:
                output( ' '.join( sorted( set( PDPS ) | set( custom ) ) )
                        + '\n' )
            else:
                output( describePdp( args[ 0 ], custom, self.spec.config ) )
        except SimError as e:
            error( '%s\n' % e )

    def do_set( self, line ):
        """Set an experiment or system parameter.
           Usage: set <name> <value>
           e.g. set Q 64, set values 0,2,4, set schemes sliding,3 ideal-mmse"""
        args = line.split( None, 1 )
        if len( args ) != 2:
            error( 'usage: set <name> <value>\n' )
            return
        try:
            self.spec = updateSpec( self.spec, args[ 0 ], args[ 1 ].strip() )
        except ( SimError, TypeError, ValueError ) as e:
            error( '%s\n' % e )

    def do_show( self, _line ):
        "Show the current experiment"
        for key, value in sorted( self.spec.asDict().items() ):
            if key != 'config':
                output( '%s: %s\n' % ( key, value ) )
        output( '%s\n' % self.spec.config )

    def do_run( self, _line ):
        "Run the current experiment"
        try:
            self.records = runSpec( self.spec )
        except SimError as e:
            error( '%s\n' % e )

    def do_sinr( self, _line ):
        "Show SINR of the last run, per scheme and point"
        for record in self.records:
            output( '%s Q=%s: %s\n' % ( record.scheme, record.Q,
                                        fmtDb( record.sinrDb ) ) )

    def do_py( self, line ):
        """Evaluate a Python expression.
           spec, records and np may be used, e.g.: py spec.points()"""
        # pylint: disable=broad-except,eval-used
        try:
            result = eval( line, globals(), self.getLocals() )
            if result is None:
                return
            elif isinstance( result, str ):
                output( result + '\n' )
            else:
                output( repr( result ) + '\n' )
        except Exception as e:
            output( str( e ) + '\n' )

    def do_source( self, line ):
        """Read commands from an input file.
           Usage: source <file>"""
        args = line.split()
        if len( args ) != 1:
            error( 'usage: source <file>\n' )
            return
        try:
            with open( args[ 0 ] ) as self.inputFile:
                for cmdline in self.inputFile:
                    if self.onecmd( self.precmd( cmdline ) ):
                        break
        except IOError:
            error( 'error reading file %s\n' % args[ 0 ] )
        self.inputFile = None

    def do_exit( self, _line ):
        "Exit"
        assert self  # satisfy pylint and allow override
        return 'exited by user command'

    def do_quit( self, line ):
        "Exit"
        return self.do_exit( line )

    def do_EOF( self, line ):
        "Exit"
        output( '\n' )
        return self.do_exit( line )

    def default( self, line ):
        error( '*** Unknown command: %s\n' % line )


def buildParser():
    "Argument parser for the slidemimo command"
    parser = argparse.ArgumentParser(
        prog='slidemimo',
        description='Massive MIMO-OFDM uplink receiver experiments' )
    parser.add_argument( '--version', action='version',
                         version='slidemimo %s' % VERSION )
    parser.add_argument( '-v', '--verbosity', default='output',
                         choices=list( LEVELS ),
                         help='logging level' )
    parser.add_argument( '--logfile', metavar='PATH',
                         help='also log to this file' )
    parser.add_argument( '--custom', metavar='PATH',
                         help='PDP table with additional models' )
    sub = parser.add_subparsers( dest='command' )
    run = sub.add_parser( 'run', help='run a Monte Carlo sweep' )
    run.add_argument( '--config', metavar='PATH',
                      help='JSON experiment file' )
    run.add_argument( '--scheme', metavar='S', action='append',
                      help='scheme to run, e.g. sliding,depth=3 '
                      '(repeatable)' )
    run.add_argument( '--sweep', choices=SWEEPS,
                      help='sweep variable' )
    run.add_argument( '--values', metavar='LIST',
                      help='comma-separated sweep values' )
    run.add_argument( '--trials', metavar='N', type=int,
                      help='frames per sweep point' )
    run.add_argument( '--seed', metavar='N', type=int, help='master seed' )
    run.add_argument( '--alpha', choices=( EXACT, APPROX ),
                      help='frequency correlation for sliding schemes' )
    run.add_argument( '--out', metavar='PATH', help='CSV output file' )
    run.add_argument( '--workers', metavar='N', type=int,
                      help='worker processes' )
    run.add_argument( '--pdp', metavar='NAME', help='PDP model' )
    run.add_argument( '--snr', metavar='DB', type=float, dest='snrDb',
                      help='input SNR (dB)' )
    run.add_argument( '--ebn0', metavar='DB', type=float, dest='ebn0Db',
                      help='Eb/N0 (dB), overrides --snr' )
    run.add_argument( '--sir', action='store_true', dest='measureSir',
                      help='also measure SIR on a noiseless run' )
    run.add_argument( '--time-domain', action='store_true',
                      dest='timeDomain',
                      help='propagate through the OFDM modem' )
    pdp = sub.add_parser( 'pdp', help='list or describe PDP models' )
    pdp.add_argument( 'name', nargs='?', help='model to describe' )
    sub.add_parser( 'console', help='interactive console (default)' )
    return parser


def specFromArgs( args ):
    "ExperimentSpec from a JSON file (if any) overridden by flags"
    spec = ExperimentSpec.load( args.config ) if args.config else (
        ExperimentSpec() )
    overrides = {}
    for key in ( 'sweep', 'trials', 'seed', 'alpha', 'out', 'workers',
                 'pdp', 'snrDb', 'ebn0Db' ):
        value = getattr( args, key )
        if value is not None:
            overrides[ key ] = value
    if args.scheme:
        overrides[ 'schemes' ] = args.scheme
    if args.values:
        overrides[ 'values' ] = splitValues( args.values )
    if args.measureSir:
        overrides[ 'measureSir' ] = True
    if args.timeDomain:
        overrides[ 'timeDomain' ] = True
    if args.custom:
        overrides[ 'custom' ] = args.custom
    return spec.copy( **overrides ) if overrides else spec


def main( argv=None ):
    """Run the slidemimo command.
       argv: argument list (default sys.argv[1:])
       returns: exit status"""
    args = buildParser().parse_args( argv )
    setLogLevel( args.verbosity )
    if args.logfile:
        addLogFile( args.logfile )
    try:
        if args.command == 'run':
            runSpec( specFromArgs( args ) )
        elif args.command == 'pdp':
            custom = loadPdpTable( args.custom ) if args.custom else {}
            if args.name:
                output( describePdp( args.name, custom ) )
            else:
                for name in sorted( set( PDPS ) | set( custom ) ):
                    output( describePdp( name, custom ) + '\n' )
        else:
            spec = ExperimentSpec( custom=args.custom )
            Console( spec ).run()
    except SimError as e:
        error( '*** Error: %s\n' % e )
        return 1
    finally:
        closeLogFiles()
    return 0


if __name__ == '__main__':
    sys.exit( main() )
