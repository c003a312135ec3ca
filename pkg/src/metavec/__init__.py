"""Meta-embeddings from pre-trained word vectors: alignment, synthesis, combination, evaluation."""

from metavec.align import (
    AlignedCollection,
    AlignmentInfo,
    MappingDictionary,
    align_to_target,
    build_intersection_dictionary,
    load_bilingual_dictionary,
)
from metavec.combine import (
    CombineConfig,
    MetaEmbedding,
    apply_language_prefixes,
    combine,
    combine_average,
    combine_concat,
    combine_concat_reduce,
    combine_mvm,
    provenance_json,
    write_provenance,
)
from metavec.embeddings import (
    EmbeddingSpace,
    ParseError,
    detect_format,
    load_embeddings,
    parse_binary_embeddings,
    parse_text_embeddings,
    save_embeddings,
    write_binary_embeddings,
    write_text_embeddings,
)
from metavec.evaluate import (
    EvalReport,
    SimilarityDataset,
    SuiteSummary,
    evaluate,
    evaluate_suite,
    format_report_table,
    load_similarity_dataset,
    report_records,
    spearman,
)
from metavec.linalg import (
    OrthogonalMap,
    ReductionMap,
    apply_map,
    apply_reduction,
    cosine,
    fit_reduction,
    l2_normalize_rows,
    mean_center_columns,
    normalize_step0,
    solve_procrustes,
)
from metavec.oov import (
    NeighborList,
    SynthesisReport,
    extend_to_union,
    format_audit_dump,
    nearest_neighbors,
    synthesize_word,
)

__version__ = "0.1.0"

__all__ = [
    "AlignedCollection",
    "AlignmentInfo",
    "CombineConfig",
    "EmbeddingSpace",
    "EvalReport",
    "MappingDictionary",
    "MetaEmbedding",
    "NeighborList",
    "OrthogonalMap",
    "ParseError",
    "ReductionMap",
    "SimilarityDataset",
    "SuiteSummary",
    "SynthesisReport",
    "__version__",
    "align_to_target",
    "apply_language_prefixes",
    "apply_map",
    "apply_reduction",
    "build_intersection_dictionary",
    "combine",
    "combine_average",
    "combine_concat",
    "combine_concat_reduce",
    "combine_mvm",
    "cosine",
    "detect_format",
    "evaluate",
    "evaluate_suite",
    "extend_to_union",
    "fit_reduction",
    "format_audit_dump",
    "format_report_table",
    "l2_normalize_rows",
    "load_bilingual_dictionary",
    "load_embeddings",
    "load_similarity_dataset",
    "mean_center_columns",
    "nearest_neighbors",
    "normalize_step0",
    "parse_binary_embeddings",
    "parse_text_embeddings",
    "provenance_json",
    "report_records",
    "save_embeddings",
    "solve_procrustes",
    "spearman",
    "synthesize_word",
    "write_binary_embeddings",
    "write_provenance",
    "write_text_embeddings",
]
