"Logging functions for slidemimo."

import logging
from logging import Logger


# 'output' sits between info and warning: result tables and summaries a
# user asked for, without the per-stage chatter of info. Unit tests run
# at warning so that neither shows up.
OUTPUT = 25

LEVELS = { 'debug': logging.DEBUG,
           'info': logging.INFO,
           'output': OUTPUT,
           'warning': logging.WARNING,
           'warn': logging.WARNING,
           'error': logging.ERROR,
           'critical': logging.CRITICAL }

LOGLEVELDEFAULT = OUTPUT

LOGMSGFORMAT = '%(message)s'
LOGFILEFORMAT = '%(asctime)s %(levelname)s %(message)s'


class StreamHandlerNoNewline( logging.StreamHandler ):
    """StreamHandler that leaves line breaks to the caller, so that
       progress dots and partial lines can be built up across calls."""

    terminator = ''


class FileHandlerStripped( logging.FileHandler ):
    """FileHandler for sweep logs: one record per line, with the
       caller's trailing newlines and '*** ' banners removed."""

    def format( self, record ):
        msg = logging.FileHandler.format( self, record )
        return msg.rstrip( '\n' ).replace( '*** ', '' )


class SlideLogger( Logger ):
    """slidemimo logger
       Every module gets its helpers with one import:

       from slidemimo.log import info, output, warn, error, debug

       The console handler prints messages verbatim (no added newline);
       addLogFile() attaches a second, line-oriented handler."""

    def __init__( self, name="slidemimo" ):
        Logger.__init__( self, name )
        ch = StreamHandlerNoNewline()
        ch.setFormatter( logging.Formatter( LOGMSGFORMAT ) )
        self.addHandler( ch )
        self.ch = ch
        self.fileHandlers = []
        self.setLogLevel()

    def setLogLevel( self, levelname=None ):
        """Setup loglevel.
           levelname: lowercase level name from LEVELS (default 'output')"""
        if levelname and levelname not in LEVELS:
            raise ValueError( 'setLogLevel: unknown levelname %s (use %s)'
                              % ( levelname, ', '.join( LEVELS ) ) )
        level = LEVELS.get( levelname, LOGLEVELDEFAULT )
        self.setLevel( level )
        self.ch.setLevel( level )

    def addLogFile( self, path, levelname='info' ):
        """Also log to a file.
           path: log file name (appended to)
           levelname: minimum level written to the file
           returns: the new handler"""
        fh = FileHandlerStripped( path )
        fh.setFormatter( logging.Formatter( LOGFILEFORMAT ) )
        fh.setLevel( LEVELS[ levelname ] )
        self.addHandler( fh )
        self.fileHandlers.append( fh )
        if self.level > fh.level:
            self.setLevel( fh.level )
        return fh

    def closeLogFiles( self ):
        "Detach and close handlers added by addLogFile()"
        for fh in self.fileHandlers:
            self.removeHandler( fh )
            fh.close()
        self.fileHandlers = []
        self.setLevel( self.ch.level )

    def output( self, msg, *args, **kwargs ):
        "Log 'msg % args' with severity 'OUTPUT'."
        if self.isEnabledFor( OUTPUT ):
            self._log( OUTPUT, msg, args, **kwargs )


def makeListCompatible( fn ):
    """Return a new function allowing fn( 'a 1 b' ) to be called as
       newfn( 'a', 1, 'b' )"""

    def newfn( *args ):
        "Generated function. Closure-ish."
        if len( args ) == 1:
            return fn( *args )
        args = ' '.join( str( arg ) for arg in args )
        return fn( args )

    newfn.__name__ = fn.__name__
    newfn.__doc__ = fn.__doc__
    return newfn


# Initialize logger and logging functions

_previous = logging.getLoggerClass()
logging.setLoggerClass( SlideLogger )
lg = logging.getLogger( "slidemimo" )
logging.setLoggerClass( _previous )
lg.propagate = False
_loggers = lg.info, lg.output, lg.warning, lg.error, lg.debug
_loggers = tuple( makeListCompatible( logger ) for logger in _loggers )
lg.info, lg.output, lg.warning, lg.error, lg.debug = _loggers
info, output, warning, error, debug = _loggers
warn = warning
setLogLevel = lg.setLogLevel
addLogFile = lg.addLogFile
closeLogFiles = lg.closeLogFiles
