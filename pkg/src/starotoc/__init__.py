"""Information scrambling in hierarchical star-topology spin registers."""
from .analysis import Spectrum, fourier_spectrum, gradient_ratio, spectral_support
from .evolution import (
    CtpSchedule,
    DecoherenceParams,
    EvolutionMode,
    Propagator,
    ctp_schedule,
    evolve,
    lindblad_step,
    propagator,
)
from .mqc import (
    MqcLabel,
    coherence_order,
    collective_cnot,
    prepare_deviation,
    prepare_mqc,
    xi_state,
)
from .otoc import (
    OtocSeries,
    layer_scrambling_otoc,
    mixed_expansion_check,
    nmr_signal,
    nmr_signal_series,
    otoc_commutator_form,
    otoc_general,
    otoc_mqc,
)
from .spin_algebra import (
    Layer,
    RegisterTooLarge,
    SiteIndex,
    collective_flip,
    collective_sum,
    commutator,
    embed_pauli,
    overlap_trace,
)
from .topology import (
    HamiltonianParams,
    TopologySpec,
    build_external,
    build_hamiltonian,
    build_internal,
    site_map,
)

__version__ = "0.1.0"
