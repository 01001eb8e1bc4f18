#pragma once

#include <iosfwd>

namespace uvgrasp::cli {

// Runs one command line. Progress goes to `out`; failures end `err` with a
// single line `error: code=<Code> message="<text>"`. Returns the exit code:
// 0 on success, 1 for library errors, 2 for usage errors.
int
run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace uvgrasp::cli
