"""John position, centroid heights and concentration checks for high-dimensional convex bodies."""

from .constructions import (BodySpec, ConeBody, CylinderBody, KBody, LBody, PBody, QBody, a_prime_norm,
                            build_L2, build_P, build_Q, epsilon_n, make_body, rho_L, rho_L2, rho_Q)
from .errors import (CertificationError, ConstructionError, ConvergenceError, DomainError, GeometryError,
                     InputError, SamplingError)
from .geom import Ellipsoid, HPolytope, JohnCertificate, Segment, SliceProfile, contains
from .john import extract_contacts, john_report, lift_decomposition, solve_mvie
from .moments import MomentEstimate, centroid_height, half_volume_sign, sign_integral_F, sweep
from .sampling import RngStream, SampleBatch, hit_and_run, rejection_sample, sample_sphere
from .signedlog import SignedLog

__all__ = [name for name in dir() if not name.startswith("_")]
