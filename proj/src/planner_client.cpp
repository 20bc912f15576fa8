#include "r2x/planner_client.hpp"

#include <cstdlib>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <httplib.h>
#include <json.hpp>

#include "r2x/errors.hpp"
#include "r2x/scenario.hpp"

namespace r2x {

PlannerConfig planner_config_from_env(PlannerConfig base) {
  if (const char* e = std::getenv("R2X_PLANNER_ENDPOINT")) base.endpoint = e;
  if (const char* k = std::getenv("R2X_PLANNER_API_KEY")) base.api_key = k;
  return base;
}

namespace {

// One-shot child process: the prompt goes to its stdin, the plan comes back
// on its stdout. A nonzero exit or empty output is a transport failure.
std::string run_subprocess(const std::string& path, const std::string& input) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) throw TransportError("pipe failed");
  pid_t pid = fork();
  if (pid < 0) throw TransportError("fork failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl(path.c_str(), path.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  std::size_t off = 0;
  while (off < input.size()) {
    ssize_t n = write(in_pipe[1], input.data() + off, input.size() - off);
    if (n <= 0) break;  // child may exit without reading everything
    off += static_cast<std::size_t>(n);
  }
  close(in_pipe[1]);
  std::string output;
  char buf[4096];
  ssize_t n;
  while ((n = read(out_pipe[0], buf, sizeof buf)) > 0) output.append(buf, n);
  close(out_pipe[0]);
  int status = 0;
  waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw TransportError("planner process exited with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  if (output.empty()) throw TransportError("planner process produced no output");
  return output;
}

std::string post_http(const std::string& endpoint, const std::string& api_key,
                      const std::string& body) {
  // split scheme://host:port and the path
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) throw TransportError("bad endpoint: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

  httplib::Client cli(base);
  cli.set_connection_timeout(5, 0);
  cli.set_read_timeout(30, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
  auto res = cli.Post(path, headers, body, "application/json");
  if (!res) throw TransportError("no response from " + endpoint);
  if (res->status != 200)
    throw TransportError("http status " + std::to_string(res->status) + " from " + endpoint);
  return res->body;
}

}  // namespace

std::string PlannerClient::transport_once(const std::string& prompt) {
  if (cfg_.endpoint.rfind("cmd:", 0) == 0) return run_subprocess(cfg_.endpoint.substr(4), prompt);
  return post_http(cfg_.endpoint, cfg_.api_key, prompt);
}

PlanOutcome PlannerClient::request_plan(const SemanticState& s, const GoalCondition& goal,
                                        const GridWorld& map, const std::string& task) {
  if (cfg_.endpoint.empty()) return baseline_plan(s, goal, map, task, cfg_.max_nodes);

  const std::string prompt = build_prompt(s, goal, task, cfg_.max_nodes);
  PlanOutcome out;
  out.prompt_tokens = token_proxy_for(prompt);

  std::string body;
  for (int attempt = 0;; ++attempt) {
    try {
      body = transport_once(prompt);
      break;
    } catch (const TransportError& e) {
      if (attempt >= cfg_.retries) {
        out.error = std::string("transport: ") + e.what();
        return out;
      }
    }
  }
  out.completion_tokens = token_proxy_for(body);
  try {
    out.plan = plan_from_json(nlohmann::json::parse(body));
    out.ok = true;
  } catch (const nlohmann::json::exception& e) {
    out.error = std::string("schema: ") + e.what();
  } catch (const SchemaError& e) {
    out.error = std::string("schema: ") + e.what();
  }
  return out;
}

}  // namespace r2x
