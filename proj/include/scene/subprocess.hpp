#pragma once

#include <string>
#include <vector>

namespace scene {

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string std_out;
    std::string std_err;
};

// Runs argv[0] with the given arguments, capturing stdout/stderr. No shell.
// The child is killed after timeout_sec (<= 0 means no timeout).
ProcessResult run_process(const std::vector<std::string>& argv, double timeout_sec = 0.0);

// One-line rendering of an argv for logs and error messages.
std::string render_argv(const std::vector<std::string>& argv);

bool executable_on_path(const std::string& name);

}  // namespace scene
