#include <atomic>
#include <thread>

#include "candlekit/error.hpp"
#include "candlekit/parallel.hpp"

namespace candlekit {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Gap: return "gap";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::DegenerateMarket: return "degenerate-market";
    case ErrorKind::DegenerateResidual: return "degenerate-residual";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::SingularFactor: return "singular-factor";
    case ErrorKind::CalibrationFailure: return "calibration-failure";
    case ErrorKind::SingularDraws: return "singular-draws";
    case ErrorKind::ArtifactMismatch: return "artifact-mismatch";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {
std::atomic<unsigned> g_threads{1};
}

void set_thread_count(unsigned n) noexcept {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  g_threads.store(n);
}

unsigned thread_count() noexcept { return g_threads.load(); }

}  // namespace candlekit
