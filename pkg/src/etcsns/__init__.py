"""Block-scrambling encryption-then-compression for JPEG images on social networks.

The pieces:

* :mod:`etcsns.image` -- RGB rasters, PPM I/O, PSNR, resizing;
* :mod:`etcsns.cipher` -- the four-step block scrambling cipher;
* :mod:`etcsns.jpeg` -- a baseline JPEG codec with DCT-domain requantization;
* :mod:`etcsns.sns` -- local models of provider recompression;
* :mod:`etcsns.evaluation` -- the encrypt / upload / decrypt experiment grid.
"""

from .cipher import EtcKey, decrypt, encrypt, read_key_file, write_key_file
from .image import (BlockGrid, FormatError, RasterImage, block_count, crop_to_block_multiple,
                    load_ppm, psnr, read_ppm, resize_bilinear, save_ppm, write_ppm)

__version__ = "0.1.0"

__all__ = [
    "BlockGrid", "EtcKey", "FormatError", "RasterImage", "block_count",
    "crop_to_block_multiple", "decrypt", "encrypt", "load_ppm", "psnr",
    "read_key_file", "read_ppm", "resize_bilinear", "save_ppm", "write_key_file",
    "write_ppm",
]
