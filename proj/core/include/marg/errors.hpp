#pragma once

#include <stdexcept>
#include <string>

namespace marg {

// Base for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed structured-paper input.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(what) {}
};

// Input document contains no usable paragraphs.
class EmptyPaperError : public Error {
public:
    explicit EmptyPaperError(const std::string& what) : Error(what) {}
};

// A prompt template is missing a required placeholder, or contains an
// unknown one that cannot be resolved.
class PromptTemplateError : public Error {
public:
    explicit PromptTemplateError(const std::string& what) : Error(what) {}
};

// A completion request exceeds the backend's input token limit.
class TokenLimitError : public Error {
public:
    explicit TokenLimitError(const std::string& what) : Error(what) {}
};

// Network-level failure talking to a live backend (retryable).
class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what) {}
};

// The backend rejected the request with a non-retryable error.
class BackendRefusal : public Error {
public:
    explicit BackendRefusal(const std::string& what) : Error(what) {}
};

// A scripted backend in strict mode received a request no exchange matches.
class ScriptMatchError : public Error {
public:
    explicit ScriptMatchError(const std::string& what) : Error(what) {}
};

// An aggregation was asked for over an empty input.
class EmptyInputError : public Error {
public:
    explicit EmptyInputError(const std::string& what) : Error(what) {}
};

}  // namespace marg
