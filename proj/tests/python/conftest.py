import os
import sys

# In-tree runs: the build tree holds the extension, the source tree holds the
# package. Installed runs need neither variable.
_core_dir = os.environ.get("TRUSSNET_CORE_DIR")
if _core_dir:
    sys.path.insert(0, _core_dir)
_source_dir = os.environ.get("TRUSSNET_SOURCE_DIR")
if _source_dir:
    sys.path.insert(0, os.path.join(_source_dir, "python"))
