"""Partner orbits of the geodesic flow on a compact hyperbolic surface.

Builds periodic orbits on the quotient of PSL(2, R) by the regular
octagon surface group, detects 2-encounters and constructs and verifies
their partner orbits.
"""

from __future__ import annotations

# Constructions
from hgpartners.closing import ClosingResult
from hgpartners.closing import close_orbit_I
from hgpartners.closing import close_orbit_II
from hgpartners.closing import connect_orbits

# Configuration
from hgpartners.config import HgPartnersSettings
from hgpartners.config import RunConfig

# Exceptions
from hgpartners.exceptions import AngleTooLarge
from hgpartners.exceptions import BallTooSmall
from hgpartners.exceptions import BoundViolated
from hgpartners.exceptions import ConditionViolated
from hgpartners.exceptions import ConfigurationError
from hgpartners.exceptions import ConstructionFailed
from hgpartners.exceptions import DegenerateDecomposition
from hgpartners.exceptions import EncounterTypeMismatch
from hgpartners.exceptions import HgPartnersError
from hgpartners.exceptions import IdentifyFailed
from hgpartners.exceptions import InvalidParameter
from hgpartners.exceptions import LogUndefined
from hgpartners.exceptions import NotHyperbolic
from hgpartners.exceptions import NotInSection
from hgpartners.exceptions import NotPrimitive
from hgpartners.exceptions import ReductionFailed
from hgpartners.exceptions import TrivialWord
from hgpartners.exceptions import WordSplitFailed

# Flow, orbits and encounters
from hgpartners.flow import Crossing
from hgpartners.flow import Encounter
from hgpartners.flow import EncounterKind
from hgpartners.flow import PeriodicOrbit
from hgpartners.flow import QuotientPoint
from hgpartners.flow import SectionCoords
from hgpartners.flow import SectionVariant
from hgpartners.flow import detect_encounters
from hgpartners.flow import detect_self_crossings
from hgpartners.flow import find_section_hits
from hgpartners.flow import orbit_from_class
from hgpartners.flow import orbit_from_word
from hgpartners.flow import section_coords

# Group elements and the surface group
from hgpartners.fuchsian import ConjClass
from hgpartners.fuchsian import SurfaceGroup
from hgpartners.fuchsian import load_group
from hgpartners.fuchsian import octagon_group
from hgpartners.moebius import MoebiusElement

# Partners
from hgpartners.partners import PartnerResult
from hgpartners.partners import PartnershipCertificate
from hgpartners.partners import Topology
from hgpartners.partners import crossing_partner
from hgpartners.partners import orbits_coincide
from hgpartners.partners import partner_aas
from hgpartners.partners import partner_api
from hgpartners.partners import partner_ppi
from hgpartners.partners import partner_single_antiparallel
from hgpartners.partners import verify_partnership

# Spectrum and reports
from hgpartners.reports import BoundReport
from hgpartners.spectrum import PairCatalogEntry
from hgpartners.spectrum import SpectrumEntry
from hgpartners.spectrum import enumerate_classes
from hgpartners.spectrum import form_factor_diagonal
from hgpartners.spectrum import length_spectrum
from hgpartners.spectrum import mirror_entry
from hgpartners.spectrum import pair_catalog

__all__ = [
    "AngleTooLarge",
    "BallTooSmall",
    "BoundReport",
    "BoundViolated",
    "ClosingResult",
    "ConditionViolated",
    "ConfigurationError",
    "ConjClass",
    "ConstructionFailed",
    "Crossing",
    "DegenerateDecomposition",
    "Encounter",
    "EncounterKind",
    "EncounterTypeMismatch",
    "HgPartnersError",
    "HgPartnersSettings",
    "IdentifyFailed",
    "InvalidParameter",
    "LogUndefined",
    "MoebiusElement",
    "NotHyperbolic",
    "NotInSection",
    "NotPrimitive",
    "PairCatalogEntry",
    "PartnerResult",
    "PartnershipCertificate",
    "PeriodicOrbit",
    "QuotientPoint",
    "ReductionFailed",
    "RunConfig",
    "SectionCoords",
    "SectionVariant",
    "SpectrumEntry",
    "SurfaceGroup",
    "Topology",
    "TrivialWord",
    "WordSplitFailed",
    "close_orbit_I",
    "close_orbit_II",
    "connect_orbits",
    "crossing_partner",
    "detect_encounters",
    "detect_self_crossings",
    "enumerate_classes",
    "find_section_hits",
    "form_factor_diagonal",
    "length_spectrum",
    "load_group",
    "mirror_entry",
    "octagon_group",
    "orbit_from_class",
    "orbit_from_word",
    "orbits_coincide",
    "pair_catalog",
    "partner_aas",
    "partner_api",
    "partner_ppi",
    "partner_single_antiparallel",
    "section_coords",
    "verify_partnership",
]

__version__ = "0.1.0"
