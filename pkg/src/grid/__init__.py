from src.grid.grid import Grid3, SampledField3, make_grid, sample_field, lp_norm, zero_field

__all__ = ["Grid3", "SampledField3", "make_grid", "sample_field", "lp_norm", "zero_field"]
