"""Exception hierarchy shared across the pipeline stages."""


class SerialBehrtError(Exception):
    """Base class for all pipeline errors."""


class MissingTable(SerialBehrtError):
    """A required input table file is absent."""


class SchemaError(SerialBehrtError):
    """A table header or row violates the documented schema."""


class ConfigError(SerialBehrtError):
    """Invalid configuration value or unknown configuration key."""


class TemplateError(SerialBehrtError):
    """A serialization template references an unknown field."""


class EmptyCorpus(SerialBehrtError):
    """An operation received a corpus with no usable documents."""


class DuplicateId(SerialBehrtError):
    """Two documents share the same doc_id."""


class VocabError(SerialBehrtError):
    """Vocabulary contents violate the token/id contract."""


class EmptyMask(SerialBehrtError):
    """A masked-language-model loss was requested with zero supervised positions."""


class InputError(SerialBehrtError):
    """Model input violates shape or id-range constraints."""


class EmptyContent(SerialBehrtError):
    """Mean pooling was requested over a sequence with no content tokens."""


class CorruptCheckpoint(SerialBehrtError):
    """Checkpoint payload does not match its recorded digest."""


class VersionError(SerialBehrtError):
    """Checkpoint version or tensor shapes are incompatible."""


class FeatureError(SerialBehrtError):
    """Feature matrix width does not match the trained model."""


class EmptyEval(SerialBehrtError):
    """A metric was requested on an empty sample."""


class DegenerateLabels(SerialBehrtError):
    """A metric is undefined because only one class is present."""


class IncompleteTable(SerialBehrtError):
    """A score table has missing cells and cannot be ranked."""


class IoError(SerialBehrtError):
    """A report or artifact could not be written."""


class EndpointError(SerialBehrtError):
    """The chat-completion endpoint failed after exhausting retries."""


class ProtocolError(SerialBehrtError):
    """The endpoint response does not follow the chat-completion wire format."""
