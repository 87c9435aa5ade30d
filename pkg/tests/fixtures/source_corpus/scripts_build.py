"""Build helper invoked by CI, not a server module."""
import shutil


def clean(path="build"):
    shutil.rmtree(path, ignore_errors=True)
