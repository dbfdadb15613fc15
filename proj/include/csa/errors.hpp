#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace csa {

// Base for all typed errors. kind() is stable and machine-readable; the CLI
// maps it to an exit code and emits it in the error JSON on stderr.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

#define CSA_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                       \
      public:                                                         \
        explicit Name(const std::string& message)                     \
            : Error(#Name, message) {}                                \
    }

// strategy-core
CSA_DEFINE_ERROR(CatalogError);

class UnknownStrategy : public Error {
  public:
    explicit UnknownStrategy(std::string_view name)
        : Error("UnknownStrategy", "unknown strategy: '" + std::string(name) + "'"),
          name_(name) {}

    const std::string& name() const noexcept { return name_; }

  private:
    std::string name_;
};

// cot-structure
class ParseError : public Error {
  public:
    explicit ParseError(std::string_view tag, std::string_view detail = {})
        : Error("ParseError",
                "annotation tag <" + std::string(tag) + ">" +
                    (detail.empty() ? std::string(": missing or malformed")
                                    : ": " + std::string(detail))),
          tag_(tag) {}

    const std::string& tag() const noexcept { return tag_; }

  private:
    std::string tag_;
};

CSA_DEFINE_ERROR(FormatError);

// judge-gateway
CSA_DEFINE_ERROR(PromptError);
CSA_DEFINE_ERROR(TransportError);
CSA_DEFINE_ERROR(ScoreRangeError);
CSA_DEFINE_ERROR(ScoreParseError);
CSA_DEFINE_ERROR(PanelError);

class JudgeHttpError : public Error {
  public:
    JudgeHttpError(int status, const std::string& message)
        : Error("JudgeHttpError", message), status_(status) {}

    int status() const noexcept { return status_; }

  private:
    int status_;
};

// consistency-scoring
CSA_DEFINE_ERROR(DegenerateVector);
CSA_DEFINE_ERROR(PanelMismatch);
CSA_DEFINE_ERROR(SelectionError);

// strategy-sampler
CSA_DEFINE_ERROR(MissingStrategy);
CSA_DEFINE_ERROR(WeightError);
CSA_DEFINE_ERROR(AssemblyError);

class StratumUnderflow : public Error {
  public:
    StratumUnderflow(std::string_view strategy, const std::string& message)
        : Error("StratumUnderflow", message), strategy_(strategy) {}

    const std::string& strategy() const noexcept { return strategy_; }

  private:
    std::string strategy_;
};

// pipeline-cli
CSA_DEFINE_ERROR(UsageError);
CSA_DEFINE_ERROR(IoError);
CSA_DEFINE_ERROR(ConfigError);

#undef CSA_DEFINE_ERROR

}  // namespace csa
