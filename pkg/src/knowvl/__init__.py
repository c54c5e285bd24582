"""Desk-scale knowledge-grounded vision-language pre-training.

The pipeline turns image records (captions + detected objects) plus a mined
knowledge base into a labeled corpus for four objectives — masked language
modeling, image-text matching, image-knowledge matching, and image edit
checking — and trains a small gradient-checked transformer on it.
"""

from .assembly import (
    AssemblyConfig,
    Vocabulary,
    apply_mlm_mask,
    build_corpus,
    build_input,
    build_vocabulary,
    tokenize,
)
from .concepts import (
    ExtractedPhrase,
    build_knowledge_base,
    extract_category,
    extract_concept_name,
)
from .embeddings import (
    PhraseVector,
    cosine_similarity,
    phrase_embedding,
    rank_by_category_similarity,
)
from .errors import KnowvlError, ValidationError
from .estimators import (
    ConceptExtractor,
    CorpusAssembler,
    Pretrainer,
    ZeroShotClassifier,
)
from .formats import (
    CorpusManifest,
    DetectedObject,
    EmbeddingTable,
    ImageRecord,
    ParseToken,
    TrainingExample,
    VisualConcept,
    read_corpus,
    read_detections,
    read_embedding_table,
    read_knowledge_base,
    read_parse_file,
    read_records,
    write_corpus,
    write_knowledge_base,
    write_parse_file,
    write_records,
)
from .model import (
    Batch,
    LossBreakdown,
    ModelConfig,
    ModelParams,
    backward,
    batch_from_examples,
    finite_difference_check,
    forward,
    init_params,
    load_checkpoint,
    loss,
    loss_and_grads,
    save_checkpoint,
    zero_params,
)
from .sampling import (
    ReplacementRecord,
    SamplerConfig,
    apply_replacement,
    locate_concept,
    propagate_concept,
    select_iec_replacement,
    select_type2_knowledge,
    select_type3_knowledge,
)
from .training import TrainRunConfig, linear_decay_lr, report, train
from .zeroshot import ZeroShotTask, read_zero_shot_task, zero_shot_classify

__version__ = "0.1.0"
