"""Keyed block-wise image encryption with restricted random permutations.

Images are scrambled in two keyed stages matched to a vision
transformer's patch grid: whole p x p blocks are reordered, then one
shared permutation shuffles the values inside every block. Each stage
can be *restricted* by fixing a chosen number of positions, which tunes
the scheme continuously between full scrambling and no-op.
"""

from .analysis import (
    EncryptionReport,
    contact_sheet,
    mean_block_displacement,
    measure,
    pixel_correlation,
    psnr,
)
from .cipher import (
    BlockCipher,
    BlockGrid,
    EncryptedImage,
    decrypt,
    encrypt,
    partition,
    permute_pixels,
    reassemble,
    scramble_blocks,
)
from .dataset import (
    DatasetManifest,
    LabeledImage,
    ManifestItem,
    encrypt_dataset,
    iter_image_folder,
    load_manifest,
    read_cifar10,
    resize_nearest,
    save_manifest,
)
from .errors import (
    BlockpermError,
    DatasetFormatError,
    KeyFormatError,
    KeyMismatchError,
    ValidationError,
)
from .keys import (
    EncryptionKey,
    derive_key,
    derive_streams,
    fingerprint,
    keygen,
    load_key,
    save_key,
)
from .imagecodec import (
    read_encrypted_image,
    read_image,
    write_encrypted_image,
    write_image,
)
from .permutation import (
    Permutation,
    RestrictionSpec,
    apply,
    compose,
    count_fixed_points,
    generate_permutation,
    identity,
    inverse,
    load_permutation,
    save_permutation,
    to_dense,
)
from .rng import SeededStream

__version__ = "0.1.0"

__all__ = [
    "BlockCipher",
    "BlockGrid",
    "BlockpermError",
    "DatasetFormatError",
    "DatasetManifest",
    "EncryptedImage",
    "EncryptionKey",
    "EncryptionReport",
    "KeyFormatError",
    "KeyMismatchError",
    "LabeledImage",
    "ManifestItem",
    "Permutation",
    "RestrictionSpec",
    "SeededStream",
    "ValidationError",
    "apply",
    "compose",
    "contact_sheet",
    "count_fixed_points",
    "decrypt",
    "derive_key",
    "derive_streams",
    "encrypt",
    "encrypt_dataset",
    "fingerprint",
    "generate_permutation",
    "identity",
    "inverse",
    "iter_image_folder",
    "keygen",
    "load_key",
    "load_manifest",
    "load_permutation",
    "mean_block_displacement",
    "measure",
    "partition",
    "permute_pixels",
    "pixel_correlation",
    "psnr",
    "read_cifar10",
    "read_encrypted_image",
    "read_image",
    "reassemble",
    "resize_nearest",
    "save_key",
    "save_manifest",
    "save_permutation",
    "scramble_blocks",
    "to_dense",
    "write_encrypted_image",
    "write_image",
]
