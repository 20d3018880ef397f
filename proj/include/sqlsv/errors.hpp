#pragma once

#include <stdexcept>
#include <string>

namespace sqlsv {

// Base class for every error raised by the library. `kind()` is a stable
// machine-readable tag used by the CLI error payload.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SQLSV_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                     \
   public:                                                        \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

// generic precondition violation
SQLSV_DEFINE_ERROR(InvalidArgument)

// sql-frontend
SQLSV_DEFINE_ERROR(SyntaxError)
SQLSV_DEFINE_ERROR(UnknownIdentifier)
SQLSV_DEFINE_ERROR(SchemaError)

class UnsupportedConstruct : public Error {
 public:
  explicit UnsupportedConstruct(std::string construct)
      : Error("UnsupportedConstruct", "unsupported construct: " + construct),
        construct_(std::move(construct)) {}
  const std::string& construct() const noexcept { return construct_; }

 private:
  std::string construct_;
};

// logical-plan / hir
SQLSV_DEFINE_ERROR(LoweringError)

class ExprParseError : public Error {
 public:
  ExprParseError(int node, const std::string& message)
      : Error("ExprParseError", "LP node " + std::to_string(node) + ": " + message),
        node_(node) {}
  int node() const noexcept { return node_; }

 private:
  int node_;
};

// featurize
SQLSV_DEFINE_ERROR(ProviderUnavailable)

// tensor-autograd / nmpnn
SQLSV_DEFINE_ERROR(ShapeMismatch)
SQLSV_DEFINE_ERROR(NonFiniteValue)
SQLSV_DEFINE_ERROR(DimMismatch)
SQLSV_DEFINE_ERROR(EmptyGraph)

// validator
SQLSV_DEFINE_ERROR(DegenerateValidation)
SQLSV_DEFINE_ERROR(CheckpointError)

// augment
SQLSV_DEFINE_ERROR(NoApplicableSite)
SQLSV_DEFINE_ERROR(GoldExecutionError)
SQLSV_DEFINE_ERROR(SingleClassCorpus)
SQLSV_DEFINE_ERROR(CorpusFormatError)

// exec-oracle
SQLSV_DEFINE_ERROR(ExecError)
SQLSV_DEFINE_ERROR(Timeout)

// metrics
SQLSV_DEFINE_ERROR(SingleClass)
SQLSV_DEFINE_ERROR(NoPositives)

// cli
SQLSV_DEFINE_ERROR(ConfigError)

#undef SQLSV_DEFINE_ERROR

}  // namespace sqlsv
