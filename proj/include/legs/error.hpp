#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace legs {

enum class ErrorCode {
  IndexOutOfRange,
  NonPositiveWeight,
  DuplicateEdge,
  SelfLoop,
  IsolatedNode,
  DimensionMismatch,
  GraphTooLargeForDenseOracle,
  ScaleExceedsCascade,
  InvalidScales,
  UnsupportedOrder,
  PathIndexOutOfRange,
  InvalidShape,
  NonFiniteParameter,
  ShapeMismatch,
  MissingCache,
  BatchTooSmall,
  AlreadyInitialized,
  AnchorsNotInitialized,
  LabelOutOfRange,
  NonFiniteGradient,
  EmptySplit,
  DatasetTooSmall,
  LengthMismatch,
  ParseError,
  InconsistentIndicator,
  AsymmetricEdgeList,
  InvalidSizeRange,
  ZeroVarianceTarget,
  IoError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::IsolatedNode: return "IsolatedNode";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::GraphTooLargeForDenseOracle: return "GraphTooLargeForDenseOracle";
    case ErrorCode::ScaleExceedsCascade: return "ScaleExceedsCascade";
    case ErrorCode::InvalidScales: return "InvalidScales";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::PathIndexOutOfRange: return "PathIndexOutOfRange";
    case ErrorCode::InvalidShape: return "InvalidShape";
    case ErrorCode::NonFiniteParameter: return "NonFiniteParameter";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingCache: return "MissingCache";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::AlreadyInitialized: return "AlreadyInitialized";
    case ErrorCode::AnchorsNotInitialized: return "AnchorsNotInitialized";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::DatasetTooSmall: return "DatasetTooSmall";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InconsistentIndicator: return "InconsistentIndicator";
    case ErrorCode::AsymmetricEdgeList: return "AsymmetricEdgeList";
    case ErrorCode::InvalidSizeRange: return "InvalidSizeRange";
    case ErrorCode::ZeroVarianceTarget: return "ZeroVarianceTarget";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace legs
