"""Laplacian spectra on p.c.f. self-similar fractals and BGD subdomains."""
from .geometry import (AffineMap, FractalSpec, InvalidWordError, LevelCapError, VertexSet,
                       apply_word, build_vertex_set, cell_of, preset)
from .forms import (DegenerateProblemError, HarmonicStructure, LevelForm, SelfSimilarMeasure,
                    assemble, assemble_domain, check_compatibility, gamma_data, sg_harmonic,
                    snowflake_harmonic, standard_form)
from .spectra import (DenseCapError, InertiaCounter, Spectrum, UnsupportedFractalError,
                      decimate_sg, partition_function, solve_dense)
from .bgd import (BgdSystem, ConsistencyError, Domain, IncidenceAnalysis, analyze,
                  bgd_consistency, bgd_preset, domain_vertices, whitney)
from .asymptotics import (DivergenceError, InsufficientRangeError, RenewalSystem,
                          leading_profile, reducible_growth, remainder_regime, renewal_limit,
                          renewal_solve, second_profile, verify_bracketing)

__version__ = "0.1.0"
