"""Piano-score tokenization toolkit.

Converts between MusicXML, an in-memory score model, notation-level token
sequences (regular and concatenated forms), and note-level (MIDI-equivalent)
token sequences; builds paired training corpora; and scores generated
notation against originals on twelve note-wise aspects.
"""

from .score import (
    BASS,
    Clef,
    KeySignature,
    Measure,
    NoteEvent,
    Pitch,
    RestEvent,
    Score,
    StaffAttributes,
    TimeSignature,
    TREBLE,
    ValidationReport,
    VoiceSeg,
    measure_capacity,
    midi_number,
    rest_fill,
    validate_score,
)
from .tokens import (
    CONCATENATED,
    REGULAR,
    FormatErrorReport,
    FormError,
    TokenSeq,
    VocabularyError,
    concat_form,
    detokenize,
    expand_form,
    tokenize_score,
    validate_tokens,
    vocabulary,
)
from .musicxml import MusicXmlError, MusicXmlProfile, emit_musicxml, parse_musicxml
from .notelevel import (
    DanglingTieError,
    NoteLevelEvent,
    NoteLevelSeq,
    OffGridError,
    PerturbParams,
    detokenize_notelevel,
    downconvert,
    perturb,
    snap_to_grid,
    tokenize_notelevel,
    write_midi,
)
from .metric import MetricReport, align_notes, build_report, count_aspects, evaluate
from .corpus import CorpusManifest, SystemSlice, build_pairs, segment, split_songs

__version__ = "0.1.0"
