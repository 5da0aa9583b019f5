// SPDX-License-Identifier: Apache-2.0
#include <atomic>
#include <thread>

#include "httplib.h"
#include "ipd/error.hpp"
#include "ipd/session.hpp"

namespace ipd::session {

namespace {

extern const char* const kFallbackPage;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidParams:
    case ErrorCode::UnknownStrategy:
    case ErrorCode::OrderingViolation:
    case ErrorCode::TemplateError:
      return 400;
    case ErrorCode::SessionNotFound:
      return 404;
    case ErrorCode::WrongRound:
    case ErrorCode::SessionFinished:
    case ErrorCode::SessionStillActive:
      return 409;
    case ErrorCode::AgentFailure:
      return 502;
    default:
      return 500;
  }
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, Json{{"code", code_name(code)}, {"message", message}}, http_status(code));
}

Json parse_body(const httplib::Request& req) {
  auto j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded()) fail(ErrorCode::ConfigError, "request body is not valid JSON");
  return j;
}

// Runs a handler, mapping library errors to {code, message} responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const Json::exception& e) {
      send_error(res, ErrorCode::ConfigError, e.what());
    } catch (const std::exception& e) {
      send_json(res, Json{{"code", "Internal"}, {"message", e.what()}}, 500);
    }
  };
}

}  // namespace

struct SessionServer::Impl {
  SessionManager& manager;
  httplib::Server http;
  std::atomic<bool> stopping{false};
  std::thread sweeper;
  std::mutex sweep_mu;
  std::condition_variable sweep_cv;

  explicit Impl(SessionManager& m) : manager(m) {}

  void routes(const std::optional<std::filesystem::path>& static_dir) {
    http.new_task_queue = [] { return new httplib::ThreadPool(32); };
    http.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });

    http.Get("/healthz", guarded([](const httplib::Request&, httplib::Response& res) {
      send_json(res, Json{{"status", "ok"}});
    }));

    http.Get("/strategies", guarded([](const httplib::Request&, httplib::Response& res) {
      Json out = Json::array();
      for (const auto& s : list_strategies()) {
        Json params = Json::array();
        for (const auto& p : s.params) {
          params.push_back({{"name", p.name}, {"type", p.type}, {"default", p.default_value}});
        }
        out.push_back({{"name", s.name}, {"params", std::move(params)}, {"optional", s.optional}});
      }
      send_json(res, out);
    }));

    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto cfg = session_config_from_json(parse_body(req));
      auto [id, view] = manager.create_session(cfg);
      send_json(res, Json{{"id", id}, {"view", view}}, 201);
    }));

    http.Get("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, manager.view(req.path_params.at("id")));
    }));

    http.Post("/sessions/:id/moves", guarded([this](const httplib::Request& req, httplib::Response& res) {
      auto body = parse_body(req);
      if (!body.is_object() || !body.contains("round") || !body["round"].is_number_integer() ||
          !body.contains("action") || !body["action"].is_string()) {
        fail(ErrorCode::ConfigError, "move body must be {\"round\": integer, \"action\": \"C\"|\"D\"}");
      }
      Action a;
      try {
        a = action_from_string(body["action"].get<std::string>());
      } catch (const Error& e) {
        fail(ErrorCode::ConfigError, e.what());
      }
      auto r = manager.submit_move(req.path_params.at("id"), body["round"].get<int>(), a);
      send_json(res, Json{{"outcome", outcome_json(r.outcome)}, {"view", r.view}, {"duplicate", r.duplicate}});
    }));

    http.Post("/sessions/:id/finalize", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, Json(manager.finalize(req.path_params.at("id"))));
    }));

    http.Post("/sessions/:id/abort", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto& id = req.path_params.at("id");
      manager.abort(id, "aborted_by_client");
      send_json(res, manager.view(id));
    }));

    http.Get("/sessions/:id/report", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, manager.report(req.path_params.at("id")));
    }));

    http.Get("/sessions/:id/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.path_params.at("id");
      manager.view(id);  // SessionNotFound before streaming starts
      auto last = std::make_shared<std::uint64_t>(0);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [this, id, last](std::size_t, httplib::DataSink& sink) {
            if (stopping) {
              sink.done();
              return true;
            }
            const auto v = manager.wait_for_change(id, *last, std::chrono::seconds(10));
            std::string chunk;
            bool terminal = false;
            if (v > *last) {
              *last = v;
              auto view = manager.view(id);
              terminal = view.value("state", "") != "awaiting_human";
              chunk = "event: view\ndata: " + view.dump() + "\n\n";
            } else {
              chunk = ": keepalive\n\n";
            }
            if (!sink.write(chunk.data(), chunk.size())) return false;
            if (terminal || stopping) sink.done();
            return true;
          });
    }));

    if (static_dir && std::filesystem::exists(*static_dir / "index.html")) {
      http.set_mount_point("/", static_dir->string());
    } else {
      http.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kFallbackPage, "text/html; charset=utf-8");
      });
    }
  }

  void start_sweeper() {
    sweeper = std::thread([this] {
      std::unique_lock lock(sweep_mu);
      while (!stopping) {
        sweep_cv.wait_for(lock, std::chrono::seconds(15));
        if (!stopping) manager.expire_idle();
      }
    });
  }
};

SessionServer::SessionServer(SessionManager& manager, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>(manager)) {
  impl_->routes(static_dir);
}

SessionServer::~SessionServer() {
  stop();
  if (impl_->sweeper.joinable()) impl_->sweeper.join();
}

int SessionServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->http.bind_to_any_port(host) : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    fail(ErrorCode::BindError, "cannot bind " + host + ":" + std::to_string(port));
  }
  return bound;
}

void SessionServer::listen() {
  if (!impl_->sweeper.joinable()) impl_->start_sweeper();
  impl_->http.listen_after_bind();
}

void SessionServer::stop() {
  {
    std::lock_guard lock(impl_->sweep_mu);
    impl_->stopping = true;
  }
  impl_->sweep_cv.notify_all();
  impl_->manager.shutdown();
  impl_->http.stop();
}

namespace {

const char* const kFallbackPage = R"HTML(<!doctype html>
<html lang="en">
<head>
<meta charset="utf-8">
<meta name="viewport" content="width=device-width, initial-scale=1">
<title>IPD session</title>
<style>
body { font-family: system-ui, sans-serif; max-width: 40rem; margin: 2rem auto; padding: 0 1rem; }
button { font-size: 1.2rem; padding: .6rem 1.4rem; margin-right: .5rem; }
table { border-collapse: collapse; margin-top: 1rem; }
td, th { border: 1px solid #ccc; padding: .2rem .6rem; text-align: center; }
#error { color: #b00; }
</style>
</head>
<body>
<h1>Repeated game</h1>
<p>Each round, choose to cooperate or defect. Your opponent chooses at the same time.</p>
<form id="setup">
  <label>Participant label <input id="label" required></label>
  <label>Opponent <input id="opponent" value="tit_for_tat"></label>
  <button type="submit">Start</button>
</form>
<div id="game" hidden>
  <p id="note"></p>
  <p>Round <span id="round"></span> &middot; You: <span id="you"></span> &middot; Opponent: <span id="them"></span></p>
  <button id="c">Cooperate</button><button id="d">Defect</button>
  <table><thead><tr><th>Round</th><th>You</th><th>Opponent</th><th>Your points</th><th>Their points</th></tr></thead>
  <tbody id="rows"></tbody></table>
  <p id="summary"></p>
</div>
<p id="error"></p>
<script>
let id = null, view = null, busy = false;
const $ = (x) => document.getElementById(x);
async function call(method, path, body) {
  const r = await fetch(path, {method, headers: {'Content-Type': 'application/json'},
                               body: body ? JSON.stringify(body) : undefined});
  const j = await r.json();
  if (!r.ok) throw new Error(j.message || r.statusText);
  return j;
}
function render(v) {
  view = v;
  $('note').textContent = v.horizon_note || '';
  $('round').textContent = v.round;
  $('you').textContent = v.scores.human;
  $('them').textContent = v.scores.opponent;
  $('rows').innerHTML = '';
  for (const h of v.history) {
    const tr = document.createElement('tr');
    for (const x of [h.round, h.human, h.opponent, h.human_payoff, h.opponent_payoff]) {
      const td = document.createElement('td'); td.textContent = x; tr.appendChild(td);
    }
    $('rows').appendChild(tr);
  }
  const open = v.state === 'awaiting_human';
  $('c').disabled = $('d').disabled = !open || busy;
  if (!open) summary();
}
async function summary() {
  try {
    const s = await call('GET', `/sessions/${id}/report`);
    let text = `Finished after ${s.rounds} rounds. Cooperation rate ${(100 * (s.cooperation_rate || 0)).toFixed(1)}%.`;
    if (s.aborted) text += ' (session aborted)';
    if (s.adaptation && s.adaptation.adaptation_speed !== null) text += ` Adaptation speed: ${s.adaptation.adaptation_speed}.`;
    $('summary').textContent = text;
  } catch (e) { $('error').textContent = e.message; }
}
async function move(a) {
  if (busy || !view) return;
  busy = true; render(view);
  try { render((await call('POST', `/sessions/${id}/moves`, {round: view.round, action: a})).view); $('error').textContent = ''; }
  catch (e) { $('error').textContent = e.message; render(await call('GET', `/sessions/${id}`)); }
  finally { busy = false; render(view); }
}
$('c').onclick = () => move('C');
$('d').onclick = () => move('D');
$('setup').onsubmit = async (ev) => {
  ev.preventDefault();
  try {
    const r = await call('POST', '/sessions', {opponent: $('opponent').value, participant_label: $('label').value});
    id = r.id; $('setup').hidden = true; $('game').hidden = false; render(r.view);
  } catch (e) { $('error').textContent = e.message; }
};
</script>
</body>
</html>
)HTML";

}  // namespace

}  // namespace ipd::session
