from .convert import (EXPECTED_STATS, VAL_SIZE, ConversionManifest, RawParts,
                      SourceError, assemble, convert, read_planetoid_dir)

__all__ = ["EXPECTED_STATS", "VAL_SIZE", "ConversionManifest", "RawParts",
           "SourceError", "assemble", "convert", "read_planetoid_dir"]
