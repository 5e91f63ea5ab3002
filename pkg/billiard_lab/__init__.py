from typing import Optional

from .utils.config import FileConfig, load_settings

__version__ = "1.0.0"


def create_lab(instance_path: Optional[str] = None) -> FileConfig:
    """
    Loads the instance config (config_base.json) used by all calculations.

    Parameters
    ----------
    instance_path
        directory holding config_base.json; defaults to BILLIARD_LAB_INSTANCE or the
        instance directory of the repository.

    Returns
    -------
    FileConfig
        the loaded settings.
    """
    from .calculations.dynamics import tolerances

    lab_settings = load_settings(instance_path)
    tolerances.cache_clear()
    return lab_settings
