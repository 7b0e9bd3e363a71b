#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace semrank {

/// Runs the command line tool. Returns 0 on success, 1 on usage errors and 2
/// on data errors (unreadable or malformed inputs).
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace semrank
