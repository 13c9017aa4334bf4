"""Cosserat continuum kinematics and statics on the rigid-motion group."""

from .grid import ParameterGrid
from .jet_groupoid import JetElement, jet_act, jet_compose, jet_identity, jet_inverse
from .kinematics import DeformationForm, DisplacementField, KinematicalState, deformation_of
from .rigid_motion import IsoAlgebraElement, RigidMotion, Rotation, Wrench
from .statics import FundamentalOneForm, virtual_work

__all__ = [
    "ParameterGrid",
    "RigidMotion",
    "Rotation",
    "IsoAlgebraElement",
    "Wrench",
    "DisplacementField",
    "KinematicalState",
    "DeformationForm",
    "deformation_of",
    "JetElement",
    "jet_identity",
    "jet_compose",
    "jet_inverse",
    "jet_act",
    "FundamentalOneForm",
    "virtual_work",
]
