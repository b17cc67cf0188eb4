#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace reorient::cli {

/// Dispatches `phantom`, `augment`, `train`, `predict`, `reorient`,
/// `register` or `eval`. Returns 0 on success; failures print one line
/// `error: <kind>: <message>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace reorient::cli
