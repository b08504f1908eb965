#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mistnormal {

// Every failure the library reports maps to exactly one kind. The harness
// records the kind name in failed report rows.
enum class ErrorKind {
  InvalidArgument,
  InfeasibleLength,
  DegenerateArc,
  SprayOutOfRange,
  SurfaceTooThick,
  UnderDeposited,
  DegenerateView,
  NoForeground,
  MaskTooSmall,
  EmptyTruth,
  BudgetExceeded,
  MistEvaporated,
  EmptyInput,
  LostContact,
  ZeroInitialPixels,
  ImageLoadError,
  ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InfeasibleLength: return "InfeasibleLength";
    case ErrorKind::DegenerateArc: return "DegenerateArc";
    case ErrorKind::SprayOutOfRange: return "SprayOutOfRange";
    case ErrorKind::SurfaceTooThick: return "SurfaceTooThick";
    case ErrorKind::UnderDeposited: return "UnderDeposited";
    case ErrorKind::DegenerateView: return "DegenerateView";
    case ErrorKind::NoForeground: return "NoForeground";
    case ErrorKind::MaskTooSmall: return "MaskTooSmall";
    case ErrorKind::EmptyTruth: return "EmptyTruth";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::MistEvaporated: return "MistEvaporated";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::LostContact: return "LostContact";
    case ErrorKind::ZeroInitialPixels: return "ZeroInitialPixels";
    case ErrorKind::ImageLoadError: return "ImageLoadError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::InvalidArgument, message);
}

}  // namespace mistnormal
