"""Library of power delay profiles for slidemimo

The LTE extended models (EPA, EVA, ETU) are built in. More models can be
loaded from a plain-text table, one tap per line:

    # name  delay_ns  power_db
    indoor  0         0.0
    indoor  50       -3.0

Lines sharing a name form one model, in delay order.
"""

from slidemimo.channel import PdpModel
from slidemimo.log import debug
from slidemimo.util import SimError

NS = 1e-9

ETU = PdpModel( 'etu',
                [ d * NS for d in
                  ( 0, 50, 120, 200, 230, 500, 1600, 2300, 5000 ) ],
                ( -1, -1, -1, 0, 0, 0, -3, -5, -7 ) )

EVA = PdpModel( 'eva',
                [ d * NS for d in
                  ( 0, 30, 150, 310, 370, 710, 1090, 1730, 2510 ) ],
                ( 0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9 ) )

EPA = PdpModel( 'epa',
                [ d * NS for d in ( 0, 30, 70, 90, 110, 190, 410 ) ],
                ( 0, -1, -2, -3, -8, -17.2, -20.8 ) )

FLAT = PdpModel( 'flat', [ 0.0 ], [ 0.0 ] )

PDPS = { 'etu': ETU, 'eva': EVA, 'epa': EPA, 'flat': FLAT }


def loadPdpTable( path ):
    """Read PDP models from a text table.
       path: file with 'name delay_ns power_db' lines; '#' starts a comment
       returns: dict of name -> PdpModel"""
    taps = {}
    try:
        with open( path ) as table:
            lines = table.readlines()
    except IOError as e:
        raise SimError( 'cannot read PDP table %s: %s' % ( path, e ) )
    for lineno, line in enumerate( lines, start=1 ):
        line = line.split( '#' )[ 0 ].strip()
        if not line:
            continue
        fields = line.replace( ',', ' ' ).split()
        if len( fields ) != 3:
            raise SimError( '%s:%d: expected name delay_ns power_db'
                            % ( path, lineno ) )
        name, delay, power = fields
        try:
            taps.setdefault( name.lower(), [] ).append(
                ( float( delay ) * NS, float( power ) ) )
        except ValueError:
            raise SimError( '%s:%d: non-numeric delay or power'
                            % ( path, lineno ) )
    models = {}
    for name, entries in taps.items():
        entries.sort()
        models[ name ] = PdpModel( name, [ d for d, _ in entries ],
                                   [ p for _, p in entries ] )
        debug( 'loaded PDP %s from %s\n' % ( models[ name ], path ) )
    return models


def buildPdp( name, custom=None ):
    """Look up a PDP model by name.
       name: model name (case-insensitive)
       custom: optional dict of extra models, searched first
       returns: PdpModel"""
    key = name.lower()
    models = dict( PDPS )
    models.update( custom or {} )
    if key not in models:
        raise SimError( 'unknown PDP model %s - please specify one of %s'
                        % ( name, ', '.join( sorted( models ) ) ) )
    return models[ key ]
