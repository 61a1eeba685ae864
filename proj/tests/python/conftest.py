import os
import sys

# ctest points MCARSENSE_EXPECT_BUILD_TREE at the freshly built package. An
# editable install registers an import hook that would win over PYTHONPATH,
# so drop it for that run.
_tree = os.environ.get("MCARSENSE_EXPECT_BUILD_TREE")
if _tree:
    sys.meta_path[:] = [f for f in sys.meta_path if type(f).__name__ != "ScikitBuildRedirectingFinder"]
    sys.path.insert(0, _tree)
    sys.modules.pop("mcarsense", None)
