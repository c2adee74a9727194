#pragma once

#include <stdexcept>
#include <string>

namespace ishne {

// Error families. Each family maps to a distinct CLI exit code.
enum class ErrorCode {
  dangling_edge,
  dimension_mismatch,
  unknown_type,
  shape_mismatch,
  empty_input,
  non_scalar_loss,
  empty_neighborhood,
  fewer_than_one_metapath,
  empty_train_set,
  non_finite_loss,
  parse_error,
  infeasible_spec,
  split_too_large,
  checkpoint_mismatch,
  invalid_argument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::dangling_edge: return "DanglingEdge";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::unknown_type: return "UnknownType";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::non_scalar_loss: return "NonScalarLoss";
    case ErrorCode::empty_neighborhood: return "EmptyNeighborhood";
    case ErrorCode::fewer_than_one_metapath: return "FewerThanOneMetaPath";
    case ErrorCode::empty_train_set: return "EmptyTrainSet";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::infeasible_spec: return "InfeasibleSpec";
    case ErrorCode::split_too_large: return "SplitTooLarge";
    case ErrorCode::checkpoint_mismatch: return "CheckpointMismatch";
    case ErrorCode::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, std::string(error_name(code)) + ": " + msg);
}

}  // namespace ishne
