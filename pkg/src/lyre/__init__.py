"""Cross-lingual multi-label music genre classification from lyrics.

Mean-pooled multilingual sentence embeddings (or a TF-IDF bag-of-words
baseline) feed one-vs-all linear SVMs trained by dual coordinate descent,
evaluated under a balanced bootstrap protocol with optional per-set mean
centering to absorb the embedding offset between languages.
"""

from .bow import BowConfig, SparseDocVector, TfidfVectorizer, TfidfVocabulary, tokenize
from .corpus import (
    GenreSelection,
    LyricRecord,
    filter_mislabeled,
    genre_counts,
    ingest,
    label_view,
    select_genres,
    variant_tag,
)
from .embedding import (
    CentroidTransform,
    HashEmbeddingProvider,
    MeanCenterer,
    MeanPoolingEmbedder,
    PrecomputedEmbeddings,
    SentenceChunk,
    SongEmbedding,
    centralize,
    embed_corpus,
    embed_song,
    load_embedding_file,
    pool,
    resolve_provider,
    save_embedding_file,
    segment,
)
from .evaluation import (
    BootstrapResult,
    ResultMatrix,
    RunSpec,
    aggregate_matrix,
    balanced_resample,
    bootstrap,
    render_report,
    run_once,
    split_80_20,
)
from .langid import LanguageProfile, TrigramLanguageDetector, detect_language
from .metrics import f1
from .svm import (
    CvReport,
    LinearModel,
    LinearSVC,
    TrainConfig,
    cv_select_c,
    decision,
    load_model,
    predict,
    save_model,
    train_binary,
    train_one_vs_all,
)

__version__ = "0.1.0"

__all__ = [
    "BootstrapResult", "BowConfig", "CentroidTransform", "CvReport",
    "GenreSelection", "HashEmbeddingProvider", "LanguageProfile", "LinearModel",
    "LinearSVC", "LyricRecord", "MeanCenterer", "MeanPoolingEmbedder",
    "PrecomputedEmbeddings", "ResultMatrix", "RunSpec", "SentenceChunk",
    "SongEmbedding", "SparseDocVector", "TfidfVectorizer", "TfidfVocabulary",
    "TrainConfig", "TrigramLanguageDetector", "aggregate_matrix",
    "balanced_resample", "bootstrap", "centralize", "cv_select_c", "decision",
    "detect_language", "embed_corpus", "embed_song", "f1", "filter_mislabeled",
    "genre_counts", "ingest", "label_view", "load_embedding_file", "load_model",
    "pool", "predict", "render_report", "resolve_provider", "run_once",
    "save_embedding_file", "save_model", "segment", "select_genres",
    "split_80_20", "tokenize", "train_binary", "train_one_vs_all", "variant_tag",
]
