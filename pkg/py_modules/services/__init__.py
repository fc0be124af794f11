from .settings import SettingsService
from .cache import GroupTableCache, ReportFileService
from .suite import AcceptanceSuite

__all__ = [
    'SettingsService',
    'GroupTableCache',
    'ReportFileService',
    'AcceptanceSuite'
]
