from duomem.dataset.schema import (
    ConceptProfile,
    Dataset,
    DialogueHistory,
    EvalQuestion,
    HistTurn,
    KeyPoint,
)
from duomem.dataset.loader import (
    image_path,
    load_dataset,
    save_dataset,
    write_placeholder_images,
)
from duomem.dataset.builder import BuilderParams, DatasetBuilder

__all__ = [
    "ConceptProfile",
    "Dataset",
    "DialogueHistory",
    "EvalQuestion",
    "HistTurn",
    "KeyPoint",
    "image_path",
    "load_dataset",
    "save_dataset",
    "write_placeholder_images",
    "BuilderParams",
    "DatasetBuilder",
]
