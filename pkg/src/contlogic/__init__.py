"""Continuous first-order logic over dyadic truth values.

Exact arithmetic, formulas and prenex classes, computable presentations,
the series encodings of the arithmetical hierarchy, threshold diagrams and
infinitary codes.
"""

from .numerics import (HALF, ONE, ZERO, Dyadic, Enclosure, InconsistencyError, PrecisionError,
                       d_avg, d_half, d_max, d_min, d_neg, d_tsub)
from .logic import (Signature, Symbol, classify_prenex, code_of, formula_of, free_vars,
                    parse_formula, render)
from .hierarchy import (QuantPrefix, RelationTable, encode_exists_check, encode_forall_check,
                        exists_member, forall_member, star)
from .structures import (IntervalStructure, LowerBoundStructure, RelationFamily, compact_eval,
                         eval_qf, make_interval_structure, make_lower_bound_structure,
                         sample_family)
from .diagrams import (REFUTED, UNKNOWN, VERIFIED, Budget, Verdict, closed_check,
                       cross_check_lower_bounds, diagram_check, eval_enclosure, open_check,
                       recheck_witness)
from .infinitary import (CESequence, Leaf, Node, avg_code, ce_real_sequence, cut_check,
                         encode_set_pi, encode_set_sigma, eval_inf, inner_product_code,
                         make_pi_code, make_sigma_code)

__version__ = "0.1.0"
