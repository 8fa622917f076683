from dimsim.models.black_scholes import bs_delta, bs_gamma, bs_price
from dimsim.models.cashflows import EventPath, cashflows_in_window
from dimsim.models.g1pp import g1pp_bond_price
from dimsim.models.instrument import (
    CallCombination,
    EuropeanCall,
    FxCall,
    Greeks,
    Instrument,
    IrSwap,
    greeks,
    instrument_from_dict,
    portfolio_value,
)
from dimsim.models.parameters import G1ppParams, GbmParams, model_from_dict, model_to_dict

__all__ = [
    "bs_price",
    "bs_delta",
    "bs_gamma",
    "cashflows_in_window",
    "EventPath",
    "g1pp_bond_price",
    "CallCombination",
    "EuropeanCall",
    "FxCall",
    "Greeks",
    "Instrument",
    "IrSwap",
    "greeks",
    "instrument_from_dict",
    "portfolio_value",
    "G1ppParams",
    "GbmParams",
    "model_from_dict",
    "model_to_dict",
]
