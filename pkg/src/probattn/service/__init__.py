"""Session-oriented HTTP JSON API for the interactive playground."""

from .app import create_app
from .rle import decode_mask_rle, encode_mask_rle

__all__ = ["create_app", "decode_mask_rle", "encode_mask_rle"]
