"""Exception hierarchy.

``ValidationError`` subclasses signal bad input (config, schema, malformed
files) and map to CLI exit code 1. Everything else deriving from
``LikevoteError`` is a runtime failure (exit code 2).
"""


class LikevoteError(Exception):
    pass


class ValidationError(LikevoteError, ValueError):
    pass


class ConfigError(ValidationError):
    pass


class SchemaMismatch(ValidationError):
    pass


class UnknownCategory(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class ZeroTotal(LikevoteError):
    pass


class NoPoliticalLikes(LikevoteError):
    pass


class FeatureError(LikevoteError):
    """A feature could not be built for one respondent."""

    def __init__(self, respondent_id, cause):
        super().__init__(f"respondent {respondent_id!r}: {cause}")
        self.respondent_id = respondent_id
        self.cause = cause


class SingleClass(LikevoteError):
    pass


class TooFewSamples(LikevoteError):
    pass


class DegenerateGold(LikevoteError):
    pass


class Unscorable(LikevoteError):
    pass


class TooFewPosts(LikevoteError):
    pass


class EmptyCategorySet(LikevoteError):
    pass


class SubNotSubset(LikevoteError):
    pass


class EmptyUserList(LikevoteError):
    pass


class ZeroWeightMass(LikevoteError):
    pass
