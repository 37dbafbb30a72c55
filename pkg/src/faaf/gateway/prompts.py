"""System prompts per backend family.

JSON-tool backends get the stock minimal prompt.  XML-tool backends have no
native function calling, so their system prompt teaches the call format with a
single worked example; the tool description itself is appended per request.
"""

from __future__ import annotations

from faaf.gateway.types import BackendDescriptor, BackendKind, RequestMode

MINIMAL_SYSTEM_PROMPT = "You are a helpful assistant."

XML_TOOL_SYSTEM_PROMPT = """\
In this environment you have access to a set of tools you can use to answer the user's question.

You call a tool by writing a function_calls block containing one invoke element that names the tool and gives every parameter as its own tag. For example, a call to a tool named get_weather with the parameters city and unit looks like this:

<function_calls>
<invoke>
<tool_name>get_weather</tool_name>
<parameters>
<city>Paris</city>
<unit>celsius</unit>
</parameters>
</invoke>
</function_calls>

Only call the tools described below, and only assign values that each parameter's description and accepted values allow."""


def xml_tools_block(payload: str) -> str:
    return f"\n\nHere are the tools available:\n<tools>\n{payload}\n</tools>"


def default_system_prompt(backend: BackendDescriptor, mode: RequestMode) -> str:
    override = backend.options.get(f"system_prompt_{RequestMode(mode).value}")
    if override is not None:
        return str(override)
    if backend.kind.is_mock:
        return ""
    if backend.kind is BackendKind.HTTP_XML_TOOLS and mode is RequestMode.TOOL_CALL:
        return XML_TOOL_SYSTEM_PROMPT
    return MINIMAL_SYSTEM_PROMPT
