"Utility functions for slidemimo."

import os

import numpy as np

from slidemimo.log import debug


class SimError( Exception ):
    "Invalid configuration or input for a simulation stage."


class RefusalError( SimError ):
    "An equalizer declined to act (noise enhancement or lost anchor)."


# Argument strings
#
# Schemes, PDP models and sweep values are given on the command line in
# the same compact form: name,arg1,arg2,key=value...

def checkInt( s ):
    "Check if input string is an int"
    try:
        int( s )
        return True
    except ValueError:
        return False

def checkFloat( s ):
    "Check if input string is a float"
    try:
        float( s )
        return True
    except ValueError:
        return False

def makeNumeric( s ):
    "Convert string to int or float if numeric."
    if checkInt( s ):
        return int( s )
    elif checkFloat( s ):
        return float( s )
    else:
        return s

def splitArgs( argstr ):
    """Split argument string into usable python arguments
       argstr: argument string with format fn,arg2,kw1=arg3...
       returns: fn, args, kwargs"""
    split = argstr.split( ',' )
    fn = split[ 0 ].strip()
    params = [ p.strip() for p in split[ 1: ] if p.strip() ]
    args = [ makeNumeric( s ) for s in params if '=' not in s ]
    kwargs = {}
    for s in [ p for p in params if '=' in p ]:
        key, val = s.split( '=', 1 )
        kwargs[ key ] = makeNumeric( val )
    return fn, args, kwargs

def splitValues( valstr ):
    """Parse a comma-separated list of sweep values.
       'inf' is accepted for noiseless points.
       returns: list of int/float"""
    values = []
    for s in valstr.split( ',' ):
        s = s.strip()
        if not s:
            continue
        value = makeNumeric( s )
        if isinstance( value, str ):
            raise SimError( 'sweep value %r is not numeric' % s )
        values.append( value )
    if not values:
        raise SimError( 'empty sweep value list %r' % valstr )
    return values

def numCores():
    "Returns number of usable CPU cores"
    if hasattr( numCores, 'ncores' ):
        return numCores.ncores
    try:
        numCores.ncores = len( os.sched_getaffinity( 0 ) )
    except AttributeError:
        numCores.ncores = os.cpu_count() or 1
    return numCores.ncores


# Decibels

def dB( ratio ):
    """Linear power ratio to dB.
       ratio: float or array; inf maps to inf"""
    with np.errstate( divide='ignore' ):
        return 10 * np.log10( ratio )

def fmtDb( value, fmt='%.2f dB' ):
    "Format a dB value, keeping the +inf sentinel readable"
    if value is None:
        return 'NA'
    if np.isinf( value ):
        return '+inf dB' if value > 0 else '-inf dB'
    return fmt % value


# Random streams
#
# One master seed; every (sweep point, trial) gets its own SeedSequence,
# and each trial splits it into purpose streams. Results therefore do not
# depend on which worker evaluates a trial or in which order.

STREAMS = ( 'channel', 'data', 'noise' )

def trialSeeds( seed, point, trial ):
    """Seed sequences for one trial.
       seed: master seed
       point: sweep point index
       trial: trial index within the point
       returns: dict of stream name -> np.random.SeedSequence"""
    parent = np.random.SeedSequence( entropy=seed,
                                     spawn_key=( point, trial ) )
    children = parent.spawn( len( STREAMS ) )
    debug( 'trial seeds: seed=%s point=%s trial=%s\n'
           % ( seed, point, trial ) )
    return dict( zip( STREAMS, children ) )

def makeRng( seed ):
    """Return a numpy Generator.
       seed: int, SeedSequence or Generator (returned as is)"""
    if isinstance( seed, np.random.Generator ):
        return seed
    return np.random.default_rng( seed )
