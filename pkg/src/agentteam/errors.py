"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`AgentTeamError`;
the CLI maps those to exit code 1.
"""


class AgentTeamError(Exception):
    """Base class for domain errors."""


class ConfigInvalid(AgentTeamError):
    pass


class ScenarioInvalid(ConfigInvalid):
    def __init__(self, detail):
        super().__init__(detail)
        self.detail = detail


# gateway


class GatewayFailure(AgentTeamError):
    pass


class ScriptExhausted(AgentTeamError):
    def __init__(self, tag):
        super().__init__(f"scripted backend has no remaining response for tag {tag!r}")
        self.tag = tag


class EmptyText(AgentTeamError, ValueError):
    pass


class SearchUnavailable(AgentTeamError):
    pass


# orchestrator


class MalformedBossDirective(AgentTeamError):
    def __init__(self, attempts, last_error):
        super().__init__(f"boss directive unparseable after {attempts} attempts: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


class MalformedAgentMessage(AgentTeamError):
    """A worker reply could not be split into the three sections."""


class MissingSection(MalformedAgentMessage):
    def __init__(self, name):
        super().__init__(f"missing section: {name}")
        self.name = name


class OutOfOrderSections(MalformedAgentMessage):
    pass


class UnsupportedMode(AgentTeamError):
    pass


# knowledge graph


class AllSlotsUnbound(AgentTeamError, ValueError):
    pass


# asp engine


class AspError(AgentTeamError):
    pass


class AspSyntaxError(AspError):
    def __init__(self, line, column, detail):
        super().__init__(f"line {line}, column {column}: {detail}")
        self.line = line
        self.column = column
        self.detail = detail


class SafetyViolation(AspError):
    def __init__(self, rule_index, variable):
        super().__init__(
            f"rule {rule_index} is unsafe: variable {variable} does not occur in a positive body literal"
        )
        self.rule_index = rule_index
        self.variable = variable


class GroundingTooLarge(AspError):
    def __init__(self, estimated_atoms, cap):
        super().__init__(f"grounding would produce about {estimated_atoms} atoms (cap {cap})")
        self.estimated_atoms = estimated_atoms
        self.cap = cap


class UniverseTooLarge(AspError):
    def __init__(self, atom_count, cap):
        super().__init__(f"{atom_count} undetermined ground atoms exceed the enumerator cap of {cap}")
        self.atom_count = atom_count
        self.cap = cap


class TranslationFailed(AspError):
    def __init__(self, attempts, last_error):
        super().__init__(f"no valid program after {attempts} attempts; last error: {last_error}")
        self.attempts = attempts
        self.last_error = last_error


# retrieval


class UnknownCollection(AgentTeamError, KeyError):
    def __str__(self):
        return f"unknown collection: {self.args[0]}"


class DimensionMismatch(AgentTeamError, ValueError):
    pass


# theory of mind


class UnknownAuthor(AgentTeamError, ValueError):
    pass
