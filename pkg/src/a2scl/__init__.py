"""Bit-accurate model of an asymmetric adaptive SC/SCL polar decoding platform.

Modules
-------
codec     NR polar construction, CRC, PC bits, encoders, rate matching
llr       fixed-point LLR arithmetic
decoder   SC, SCL and adaptive decoding (compiled kernels)
reference slow pure-numpy decoders used as oracles
channel   hardware random number generator, ICDF noise, BPSK/AWGN
pipeline  discrete-event model of the SC cores, buffer and SCL core
harness   FER campaigns, DCI presets, result files
"""
from .channel import HardwareNoise, HwRng, IcdfTable, snr_to_sigma, uniform_to_gaussian
from .codec import CodeSpec, build_code_spec, encode_frame, polar_encode
from .decoder import DecodeOutcome, DecoderConfig, adaptive_decode, sc_decode, scl_decode
from .harness import CampaignConfig, FerPoint, dci_preset, emit_results, run_campaign
from .llr import QuantScheme
from .pipeline import PipelineConfig, failure_probability, run_pipeline, sizing_report

__version__ = "0.1.0"
