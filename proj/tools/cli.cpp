#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "upad/adversary.hpp"
#include "upad/bits.hpp"
#include "upad/error.hpp"
#include "upad/harness.hpp"
#include "upad/protocol.hpp"
#include "upad/random.hpp"
#include "upad/transcript.hpp"
#include "upad/transport.hpp"

namespace upad::cli {

namespace {

using protocol::Part;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

// Writes to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::io, "cannot write '" + path + "'");
  file << text;
}

BitString read_bits(const std::string& path) { return BitString::parse(read_file(path)); }

SharedKey read_key(const std::string& path) { return SharedKey(read_bits(path)); }

std::string key_lines(const std::vector<BitString>& r, const std::vector<BitString>& p) {
  std::ostringstream out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << (i + 1) << ",r," << r[i].to_string() << '\n';
    out << (i + 1) << ",p," << p[i].to_string() << '\n';
  }
  return out.str();
}

std::string key_lines(const std::vector<protocol::FinalKeyPair>& finals) {
  std::vector<BitString> r;
  std::vector<BitString> p;
  for (const auto& f : finals) {
    r.push_back(f.r);
    p.push_back(f.p);
  }
  return key_lines(r, p);
}

// "step,part,bits" lines, the format of --keys-out and --messages-out.
std::vector<std::tuple<std::uint32_t, Part, BitString>> parse_key_lines(const std::string& text) {
  std::vector<std::tuple<std::uint32_t, Part, BitString>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos) throw Error(Errc::parse_error, "expected step,part,bits: '" + line + "'");
    const auto part = line.substr(a + 1, b - a - 1);
    if (part != "r" && part != "p") throw Error(Errc::parse_error, "part must be r or p: '" + line + "'");
    std::uint32_t step = 0;
    try {
      step = static_cast<std::uint32_t>(std::stoul(line.substr(0, a)));
    } catch (const std::exception&) {
      throw Error(Errc::parse_error, "bad step: '" + line + "'");
    }
    out.emplace_back(step, part == "r" ? Part::r : Part::p, BitString::parse(line.substr(b + 1)));
  }
  return out;
}

struct RandomOptions {
  std::uint64_t seed = 1;
  bool os_entropy = false;

  void add_to(CLI::App* app) {
    app->add_option("--seed", seed, "Seed for reproducible randomness")->capture_default_str();
    app->add_flag("--os-entropy", os_entropy, "Seed from the operating system instead of --seed");
  }
  Rng make() const { return os_entropy ? Rng::from_os_entropy() : Rng(seed); }
};

struct SessionKeyOptions {
  std::string key_path;
  std::size_t n = 0;
  std::string key_out;

  void add_to(CLI::App* app) {
    app->add_option("--key", key_path, "Shared key file (balanced bitstring)");
    app->add_option("--n", n, "Half-length for a generated shared key when --key is absent");
    app->add_option("--key-out", key_out, "Where to save a generated shared key");
  }

  SharedKey resolve(Rng& rng) const {
    if (!key_path.empty()) return read_key(key_path);
    if (n == 0) throw CLI::ValidationError("--key or --n", "one of --key or --n is required");
    auto key = random_balanced_bits(n, rng);
    if (!key_out.empty()) emit(key_out, key.raw().to_string() + "\n", std::cout);
    return key;
  }
};

harness::RecoveryMode parse_mode(const std::string& text) { return harness::recovery_mode_from_string(text); }

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Position-key extraction cryptosystem laboratory", "upad"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  RandomOptions random;
  std::string in_path;
  std::string out_path;

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Generate a balanced shared key");
  std::size_t keygen_n = 0;
  keygen->add_option("--n", keygen_n, "Half-length: the key has n ones and n zeros")->required();
  keygen->add_option("--out", out_path, "Output key file");
  random.add_to(keygen);

  // derive
  auto* derive = app.add_subcommand("derive", "Derive the two position keys of a shared key");
  derive->add_option("--in", in_path, "Shared key file")->required();
  derive->add_option("--out", out_path, "Output prefix; writes PREFIX.r and PREFIX.p");

  // extract
  auto* extract_cmd = app.add_subcommand("extract", "Apply a position key to a sequence");
  std::string positions_path;
  extract_cmd->add_option("--positions", positions_path, "Position key file (comma-separated)")->required();
  extract_cmd->add_option("--in", in_path, "Sequence file")->required();
  extract_cmd->add_option("--out", out_path, "Output file");

  // xor
  auto* xor_cmd = app.add_subcommand("xor", "Bitwise XOR of two equal-length bitstrings (encrypt or decrypt)");
  std::string other_path;
  xor_cmd->add_option("--in", in_path, "Message or ciphertext file")->required();
  xor_cmd->add_option("--key", other_path, "Key file")->required();
  xor_cmd->add_option("--out", out_path, "Output file");

  // run-s1
  auto* run_s1 = app.add_subcommand("run-s1", "Run a seeded System-I session");
  SessionKeyOptions s1_key;
  std::size_t steps = 0;
  std::string usage = "encryption";
  std::string keys_out;
  std::string messages_out;
  s1_key.add_to(run_s1);
  run_s1->add_option("--N", steps, "Number of steps")->required();
  run_s1->add_option("--usage", usage, "encryption | authentication")
      ->check(CLI::IsMember({"encryption", "authentication"}))
      ->capture_default_str();
  run_s1->add_option("--out", out_path, "Transcript output");
  run_s1->add_option("--keys-out", keys_out, "Extracted keys (step,part,bits)");
  run_s1->add_option("--messages-out", messages_out, "Plaintexts (step,part,bits), encryption usage only");
  random.add_to(run_s1);

  // run-s2
  auto* run_s2 = app.add_subcommand("run-s2", "Run a seeded System-II session");
  SessionKeyOptions s2_key;
  bool leak_final = false;
  std::string backend = "direct";
  s2_key.add_to(run_s2);
  run_s2->add_option("--N", steps, "Number of steps")->required();
  run_s2->add_flag("--leak-final", leak_final, "Publish final keys after use (authentication data)");
  run_s2->add_option("--backend", backend, "direct | memory | socket")
      ->check(CLI::IsMember({"direct", "memory", "socket"}))
      ->capture_default_str();
  run_s2->add_option("--out", out_path, "Transcript output");
  run_s2->add_option("--keys-out", keys_out, "Final keys (step,part,bits)");
  random.add_to(run_s2);

  // attack
  auto* attack = app.add_subcommand("attack", "Run the correlation attack on a transcript");
  std::string stolen_path;
  std::string truth_path;
  bool per_step = false;
  attack->add_option("--in", in_path, "Transcript file")->required();
  attack->add_option("--stolen", stolen_path, "Stolen plaintexts (step,part,bits) matching CIPHERTEXT records");
  attack->add_option("--key", truth_path, "True shared key, for scoring only");
  attack->add_flag("--per-step", per_step, "Attack each step separately (System-II final keys)");
  attack->add_option("--out", out_path, "Report output");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo sweep of the correlation attack to CSV");
  std::string n_list = "7";
  std::string leak_list = "0";
  std::size_t trials = 10000;
  std::string mode = "strict";
  std::string config_path;
  unsigned threads = 0;
  experiment->add_option("--n", n_list, "Half-length(s): 7, 1,2,3 or 1..4")->capture_default_str();
  experiment->add_option("--N", leak_list, "Leak count(s): 5, 1,2,3 or 0..20")->capture_default_str();
  experiment->add_option("--trials", trials, "Trials per configuration")->capture_default_str();
  experiment->add_option("--mode", mode, "strict | random-guess")->capture_default_str();
  experiment->add_option("--config", config_path, "key=value config file (overrides other flags)");
  experiment->add_option("--threads", threads, "Worker threads (0 = hardware)");
  experiment->add_option("--out", out_path, "CSV output");
  experiment->add_option("--seed", random.seed, "Seed")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Broadcast a session to subscribers");
  SessionKeyOptions serve_key;
  std::string listen = "127.0.0.1:0";
  std::size_t subscribers = 1;
  unsigned wait_seconds = 30;
  serve_key.add_to(serve);
  serve->add_option("--in", in_path, "Transcript to broadcast (otherwise a seeded System-II session)");
  serve->add_option("--N", steps, "Steps of the generated session");
  serve->add_flag("--leak-final", leak_final, "Publish final keys after use");
  std::string serve_backend = "socket";
  serve->add_option("--backend", serve_backend, "memory | socket")
      ->check(CLI::IsMember({"memory", "socket"}))
      ->capture_default_str();
  serve->add_option("--listen", listen, "host:port for the socket backend")->capture_default_str();
  serve->add_option("--subscribers", subscribers, "Subscribers to wait for before broadcasting")
      ->capture_default_str();
  serve->add_option("--wait", wait_seconds, "Seconds to wait for subscribers")->capture_default_str();
  serve->add_option("--out", out_path, "Transcript of what was broadcast");
  random.add_to(serve);

  // replay
  auto* replay = app.add_subcommand("replay", "Feed a transcript or a live broadcast through B's session");
  std::string connect_to;
  std::string transcript_out;
  replay->add_option("--in", in_path, "Transcript file");
  replay->add_option("--connect", connect_to, "host:port of a running serve");
  replay->add_option("--key", truth_path, "Shared key file")->required();
  replay->add_option("--transcript-out", transcript_out, "Save the frames received with --connect");
  replay->add_option("--out", out_path, "Keys output (step,part,bits)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (keygen->parsed()) {
      auto rng = random.make();
      emit(out_path, random_balanced_bits(keygen_n, rng).raw().to_string() + "\n", out);
    } else if (derive->parsed()) {
      const auto keys = derive_position_keys(read_key(in_path));
      if (out_path.empty()) {
        out << keys.r.to_string() << '\n' << keys.p.to_string() << '\n';
      } else {
        emit(out_path + ".r", keys.r.to_string() + "\n", out);
        emit(out_path + ".p", keys.p.to_string() + "\n", out);
      }
    } else if (extract_cmd->parsed()) {
      const auto sequence = read_bits(in_path);
      const auto positions = PositionKey::parse(read_file(positions_path), sequence.size());
      emit(out_path, extract(positions, sequence).to_string() + "\n", out);
    } else if (xor_cmd->parsed()) {
      emit(out_path, xor_bits(read_bits(in_path), read_bits(other_path)).to_string() + "\n", out);
    } else if (run_s1->parsed()) {
      auto rng = random.make();
      const auto key = s1_key.resolve(rng);
      const auto run = protocol::run_system_one(
          key, steps, usage == "encryption" ? protocol::SystemOneUsage::encryption
                                            : protocol::SystemOneUsage::authentication,
          rng);
      emit(out_path, run.transcript.to_string(), out);
      if (!keys_out.empty()) emit(keys_out, key_lines(run.keys_r, run.keys_p), out);
      if (!messages_out.empty()) emit(messages_out, key_lines(run.messages_r, run.messages_p), out);
    } else if (run_s2->parsed()) {
      auto rng = random.make();
      const auto key = s2_key.resolve(rng);
      if (backend == "direct") {
        const auto run = protocol::run_system_two(key, steps, leak_final, rng);
        if (run.alice_keys != run.bob_keys) throw Error(Errc::protocol_corruption, "A and B final keys differ");
        emit(out_path, run.transcript.to_string(), out);
        if (!keys_out.empty()) emit(keys_out, key_lines(run.alice_keys), out);
      } else {
        std::unique_ptr<transport::Channel> channel;
        if (backend == "memory") {
          channel = std::make_unique<transport::MemoryChannel>();
        } else {
          channel = std::make_unique<transport::SocketServer>(transport::Endpoint{"127.0.0.1", 0});
        }
        auto bob_feed = channel->subscribe();
        auto eve_feed = channel->subscribe();
        protocol::SystemTwoSession bob(key, protocol::Role::bob);
        std::vector<protocol::FinalKeyPair> bob_keys;
        std::vector<transport::Bytes> frames;
        std::exception_ptr bob_error;
        std::thread bob_thread([&] {
          try {
            bob_keys = transport::follow_system_two(*bob_feed, bob);
          } catch (...) {
            bob_error = std::current_exception();
          }
        });
        std::thread eve_thread([&] { frames = transport::record_frames(*eve_feed); });
        std::vector<protocol::FinalKeyPair> alice_keys;
        try {
          alice_keys = transport::serve_system_two(*channel, key, steps, leak_final, rng);
        } catch (...) {
          channel->close();
          bob_thread.join();
          eve_thread.join();
          throw;
        }
        channel->close();
        bob_thread.join();
        eve_thread.join();
        if (bob_error) std::rethrow_exception(bob_error);
        if (alice_keys != bob_keys) throw Error(Errc::protocol_corruption, "A and B final keys differ");
        emit(out_path, transport::to_transcript(frames).to_string(), out);
        if (!keys_out.empty()) emit(keys_out, key_lines(alice_keys), out);
      }
    } else if (attack->parsed()) {
      const auto transcript = protocol::Transcript::parse(read_file(in_path));
      const auto view = adversary::view_from_transcript(transcript);
      std::optional<PositionKeyPair> truth;
      if (!truth_path.empty()) truth = derive_position_keys(read_key(truth_path));
      std::ostringstream report;

      if (!stolen_path.empty()) {
        const auto plaintexts = parse_key_lines(read_file(stolen_path));
        std::vector<adversary::StolenMessage> stolen;
        for (const auto& [step, part, message] : plaintexts) {
          const auto& ciphertexts = part == Part::r ? view.ciphertexts_r : view.ciphertexts_p;
          const auto it = std::find_if(ciphertexts.begin(), ciphertexts.end(),
                                       [&, s = step](const adversary::StepBits& c) { return c.step == s; });
          if (it == ciphertexts.end()) {
            throw Error(Errc::insufficient_data, "no ciphertext for stolen message of step " + std::to_string(step));
          }
          stolen.push_back({step, part, it->bits, message});
        }
        auto result = adversary::message_steal_attack(view, stolen);
        if (truth) adversary::score(result, *truth);
        adversary::write_report(report, result, view.n);
      } else if (per_step) {
        std::size_t attacked = 0;
        double total_candidates = 0;
        std::size_t indices = 0;
        std::size_t singletons = 0;
        for (std::uint32_t step = 1; step <= view.sequences.size(); ++step) {
          adversary::EveView single;
          single.n = view.n;
          single.sequences = view.sequences;
          for (const auto& leak : view.leaked_r) {
            if (leak.step == step) single.leaked_r.push_back(leak);
          }
          for (const auto& leak : view.leaked_p) {
            if (leak.step == step) single.leaked_p.push_back(leak);
          }
          if (single.leak_count() == 0) continue;
          const auto result = adversary::correlation_attack(single);
          ++attacked;
          for (const auto* part : {&result.r, &result.p}) {
            for (const auto& c : part->candidates) {
              total_candidates += static_cast<double>(c.size());
              singletons += c.size() == 1;
              ++indices;
            }
          }
          report << "step," << step << ",mean_candidates,";
          double step_total = 0;
          std::size_t step_indices = 0;
          for (const auto* part : {&result.r, &result.p}) {
            for (const auto& c : part->candidates) {
              step_total += static_cast<double>(c.size());
              ++step_indices;
            }
          }
          report << std::fixed << std::setprecision(6) << step_total / static_cast<double>(step_indices) << '\n';
        }
        if (attacked == 0) throw Error(Errc::insufficient_data, "transcript holds no leaked keys");
        report << "# steps_attacked=" << attacked << " mean_candidates=" << std::fixed << std::setprecision(6)
               << total_candidates / static_cast<double>(indices)
               << " singleton_rate=" << static_cast<double>(singletons) / static_cast<double>(indices) << '\n';
      } else {
        auto result = adversary::correlation_attack(view);
        if (truth) adversary::score(result, *truth);
        adversary::write_report(report, result, view.n);
      }
      emit(out_path, report.str(), out);
    } else if (experiment->parsed()) {
      std::vector<harness::ExperimentConfig> configs;
      if (!config_path.empty()) {
        std::istringstream config_text(read_file(config_path));
        configs = harness::parse_config(config_text);
      } else {
        for (auto n : harness::parse_count_list(n_list)) {
          for (auto leaks : harness::parse_count_list(leak_list)) {
            harness::ExperimentConfig config{n, leaks, trials, random.seed, parse_mode(mode)};
            config.validate();
            configs.push_back(config);
          }
        }
      }
      emit(out_path, harness::sweep_csv(configs, threads), out);
    } else if (serve->parsed()) {
      protocol::Transcript transcript;
      if (!in_path.empty()) {
        transcript = protocol::Transcript::parse(read_file(in_path));
      } else {
        auto rng = random.make();
        const auto key = serve_key.resolve(rng);
        if (steps == 0) throw CLI::ValidationError("--N", "--N is required when no --in transcript is given");
        transcript = protocol::run_system_two(key, steps, leak_final, rng).transcript;
      }
      if (serve_backend == "socket") {
        transport::SocketServer server(transport::parse_endpoint(listen));
        err << "listening on port " << server.port() << '\n';
        if (!server.wait_for_subscribers(subscribers, std::chrono::seconds(wait_seconds))) {
          throw Error(Errc::delivery, "timed out waiting for " + std::to_string(subscribers) + " subscriber(s)");
        }
        transport::broadcast_transcript(server, transcript);
        server.close();
      } else {
        transport::MemoryChannel channel;
        auto recorder = channel.subscribe();
        transport::broadcast_transcript(channel, transcript);
        channel.close();
        transcript = transport::to_transcript(transport::record_frames(*recorder));
      }
      if (!out_path.empty()) emit(out_path, transcript.to_string(), out);
    } else if (replay->parsed()) {
      if (in_path.empty() == connect_to.empty()) {
        throw CLI::ValidationError("--in/--connect", "exactly one of --in or --connect is required");
      }
      protocol::Transcript transcript;
      if (!in_path.empty()) {
        transcript = protocol::Transcript::parse(read_file(in_path));
      } else {
        auto feed = transport::connect(transport::parse_endpoint(connect_to));
        transcript = transport::to_transcript(transport::record_frames(*feed));
        if (!transcript_out.empty()) emit(transcript_out, transcript.to_string(), out);
      }
      const auto key = read_key(truth_path);
      const bool system_two = std::any_of(transcript.records().begin(), transcript.records().end(),
                                          [](const auto& r) { return r.kind == protocol::RecordKind::cipher_key; });
      if (system_two) {
        protocol::SystemTwoSession bob(key, protocol::Role::bob);
        emit(out_path, key_lines(protocol::replay_system_two(transcript, bob)), out);
      } else {
        protocol::SystemOneSession session(key);
        protocol::replay_system_one(transcript, session);
        emit(out_path, key_lines(session.r_set(), session.p_set()), out);
      }
    }
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace upad::cli
