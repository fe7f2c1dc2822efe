#pragma once

#include <stdexcept>
#include <string>

namespace pqadv {

enum class Errc {
  UnknownClass,
  ParamOutOfRange,
  ZeroSignal,
  ShapeMismatch,
  LengthMismatch,
  IoFailure,
  ManifestMismatch,
  EmptySet,
  InsufficientData,
  TooFewPoints,
  PerplexityTooLarge,
  ConfigInvalid,
  MissingCell,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::UnknownClass: return "UnknownClass";
    case Errc::ParamOutOfRange: return "ParamOutOfRange";
    case Errc::ZeroSignal: return "ZeroSignal";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::IoFailure: return "IoFailure";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::EmptySet: return "EmptySet";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::TooFewPoints: return "TooFewPoints";
    case Errc::PerplexityTooLarge: return "PerplexityTooLarge";
    case Errc::ConfigInvalid: return "ConfigInvalid";
    case Errc::MissingCell: return "MissingCell";
  }
  return "Error";
}

/// Library-wide exception; carries the failure category so callers and the
/// CLI can map it to exit codes without string matching.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool ok, Errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace pqadv
