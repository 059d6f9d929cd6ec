#pragma once

namespace robustfdp {

/// Build identifier stamped into report provenance. A fixed string, never a
/// compile timestamp, so equal inputs give byte-identical reports.
inline constexpr const char kBuildId[] = "robustfdp 0.1.0";

}  // namespace robustfdp
