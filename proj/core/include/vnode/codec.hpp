#pragma once

#include <string>

#include "vnode/ledger.hpp"
#include "vnode/metrics.hpp"

namespace vnode {

// Serialized forms shared by the HTTP service and the command line, so both
// print the same bytes.
std::string block_json(const Block& block);
std::string verification_json(const VerificationReport& report);
std::string metrics_report_json(const MetricsReport& report);

}  // namespace vnode
