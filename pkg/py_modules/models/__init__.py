from .validators import validate_decay_report, validate_mc_estimate, validate_suite_row

__all__ = ['validate_decay_report', 'validate_mc_estimate', 'validate_suite_row']
