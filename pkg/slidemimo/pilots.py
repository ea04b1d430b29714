"""
pilots.py: pilot books and pilot placement

PilotBook: K x Np matrix of cyclically shifted Zadoff-Chu sequences,
    P P^H = Np I

PilotPlacement: which REs carry pilots. The conventional scheme uses a
    set of L subcarriers so that the full CFR can be interpolated; the
    single-subcarrier scheme uses one reference subcarrier i. Pilots
    always occupy the first Np OFDM symbols.
"""

from math import gcd

import numpy as np

from slidemimo.log import debug
from slidemimo.util import SimError
from slidemimo.waveform import UserFrame, mapBits

CONVENTIONAL = 'conventional'
SINGLE = 'single-subcarrier'

# Largest acceptable condition number of the pilot interpolation matrix
MAXCOND = 1e6


class PilotBook( object ):
    "Orthogonal pilot sequences, one row per user."

    def __init__( self, matrix, root=None ):
        self.matrix = np.asarray( matrix, dtype=complex )
        self.root = root

    @property
    def K( self ):
        return self.matrix.shape[ 0 ]

    @property
    def Np( self ):
        return self.matrix.shape[ 1 ]

    def gram( self ):
        "P P^H (Np I for an orthogonal book)"
        return self.matrix @ self.matrix.conj().T


def zcPilotBook( Np, K, root=1 ):
    """Pilot book from cyclic shifts of an odd-length Zadoff-Chu root.
       Np: sequence length (odd)
       K: number of users (rows), K <= Np
       root: root index u, coprime with Np
       returns: PilotBook, row k = root sequence shifted by k"""
    if Np < 1 or Np % 2 == 0:
        raise SimError( 'Zadoff-Chu length must be odd, not %d' % Np )
    if K > Np:
        raise SimError( 'cannot fit %d users in a length-%d book' % ( K, Np ) )
    if gcd( root, Np ) != 1:
        raise SimError( 'root %d is not coprime with Np=%d' % ( root, Np ) )
    n = np.arange( Np )
    z = np.exp( -1j * np.pi * root * n * ( n + 1 ) / Np )
    matrix = np.stack( [ np.roll( z, k ) for k in range( K ) ] )
    return PilotBook( matrix, root=root )


def interpolationMatrix( M, indices, L ):
    """Rows `indices` and first L columns of the unitary M-point DFT.
       returns: len(indices) x L complex matrix"""
    rows = np.asarray( indices )[ :, None ]
    cols = np.arange( L )[ None, : ]
    return np.exp( -2j * np.pi * rows * cols / M ) / np.sqrt( M )


def conventionalPilotIndices( M, L, maxCond=MAXCOND ):
    """Near-equispaced pilot subcarriers for CFR interpolation.
       M: number of subcarriers
       L: channel length (number of pilot subcarriers)
       maxCond: largest acceptable condition number
       returns: sorted list of L distinct indices"""
    if L < 1 or L > M:
        raise SimError( 'need 1 <= L <= M (L=%d, M=%d)' % ( L, M ) )
    taken = set()
    indices = []
    for p in range( L ):
        # Round half up
        index = int( np.floor( p * M / L + 0.5 ) ) % M
        while index in taken:
            index = ( index + 1 ) % M
        taken.add( index )
        indices.append( index )
    indices.sort()
    cond = np.linalg.cond( interpolationMatrix( M, indices, L ) )
    if not np.isfinite( cond ) or cond > maxCond:
        raise SimError( 'pilot set for M=%d, L=%d is ill-conditioned '
                        '(cond=%.3g)' % ( M, L, cond ) )
    debug( 'pilot subcarriers M=%d L=%d cond=%.3g\n' % ( M, L, cond ) )
    return indices


class PilotPlacement( object ):
    "Pilot subcarriers and slots for one scheme."

    def __init__( self, scheme, subcarriers, Np, reference=None ):
        """scheme: CONVENTIONAL or SINGLE
           subcarriers: pilot subcarrier indices
           Np: pilot slots (the first Np OFDM symbols)
           reference: reference subcarrier for the single scheme"""
        if scheme not in ( CONVENTIONAL, SINGLE ):
            raise SimError( 'unknown pilot scheme %s' % scheme )
        self.scheme = scheme
        self.subcarriers = sorted( int( m ) for m in subcarriers )
        self.Np = int( Np )
        self.reference = reference
        if scheme == SINGLE and (
                len( self.subcarriers ) != 1 or
                self.subcarriers[ 0 ] != reference ):
            raise SimError( 'single-subcarrier placement needs exactly '
                            'the reference subcarrier' )

    @property
    def pilotSlots( self ):
        return range( self.Np )

    def mask( self, M, N ):
        "M x N boolean mask of pilot REs"
        mask = np.zeros( ( M, N ), dtype=bool )
        mask[ np.ix_( self.subcarriers, self.pilotSlots ) ] = True
        return mask

    def pilotCount( self ):
        "Pilot REs per user grid"
        return len( self.subcarriers ) * self.Np

    def totalPilotSymbols( self, K ):
        "Pilot symbols sent by all K users together"
        return K * self.pilotCount()

    def dataCount( self, M, N ):
        "Data REs per user grid"
        return M * N - self.pilotCount()

    def __repr__( self ):
        return 'PilotPlacement(%s, %d subcarriers, Np=%d)' % (
            self.scheme, len( self.subcarriers ), self.Np )


def conventionalPlacement( config, L ):
    "PilotPlacement of the conventional scheme for an L-tap channel"
    return PilotPlacement( CONVENTIONAL,
                           conventionalPilotIndices( config.M, L ),
                           config.Np )

def singlePlacement( config ):
    "PilotPlacement of the single reference subcarrier scheme"
    return PilotPlacement( SINGLE, [ config.reference ], config.Np,
                           reference=config.reference )


def buildFrames( placement, book, bits, config, constellation ):
    """Assemble every user's frame.
       placement: PilotPlacement
       book: PilotBook with K rows and Np columns
       bits: K x nbits array of source bits (nbits = data REs x log2 order)
       config: SystemConfig
       constellation: Constellation
       returns: list of K UserFrames"""
    M, N, K = config.M, config.N, config.K
    if book.K != K or book.Np != placement.Np:
        raise SimError( 'pilot book is %dx%d, need %dx%d'
                        % ( book.K, book.Np, K, placement.Np ) )
    bits = np.asarray( bits, dtype=np.uint8 ).reshape( K, -1 )
    pilotMask = placement.mask( M, N )
    need = placement.dataCount( M, N ) * constellation.bitsPerSymbol
    if bits.shape[ 1 ] != need:
        raise SimError( 'need %d bits per user, got %d'
                        % ( need, bits.shape[ 1 ] ) )
    frames = []
    for k in range( K ):
        symbols = np.zeros( ( M, N ), dtype=complex )
        symbols[ ~pilotMask ] = mapBits( bits[ k ], constellation )
        symbols[ np.ix_( placement.subcarriers, placement.pilotSlots ) ] = (
            book.matrix[ k ][ None, : ] )
        frames.append( UserFrame( symbols, pilotMask, bits[ k ] ) )
    return frames


def randomBits( placement, config, constellation, rng ):
    "K x nbits uniform source bits for buildFrames()"
    nbits = placement.dataCount( config.M, config.N ) * (
        constellation.bitsPerSymbol )
    return rng.integers( 0, 2, size=( config.K, nbits ), dtype=np.uint8 )
