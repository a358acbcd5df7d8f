#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "provdet/error.hpp"
#include "provdet/event.hpp"
#include "provdet/metrics.hpp"
#include "provdet/rng.hpp"
#include "provdet/types.hpp"

namespace provdet {

enum class ScenarioTag { ExfiltrationChain, Dropper, BackdoorNetflow };

inline ScenarioTag parse_scenario(std::string_view s) {
    if (s == "exfiltration-chain") return ScenarioTag::ExfiltrationChain;
    if (s == "dropper") return ScenarioTag::Dropper;
    if (s == "backdoor-netflow") return ScenarioTag::BackdoorNetflow;
    throw UnknownScenario("unknown attack scenario: '" + std::string(s) + "'");
}

// Each knob maps onto exactly one anomaly view so ablation runs can isolate
// them: novel tokens -> attribute, rare motif -> structure, rare event type
// on a common entity-type pair -> causality.
struct AttackScenario {
    ScenarioTag tag = ScenarioTag::ExfiltrationChain;
    std::string campaign_id = "c1";
    int node_count = 10;
    bool knob_attr = true;
    bool knob_struct = true;
    bool knob_causal = true;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    int processes = 1800;
    int files = 2200;
    int netflows = 900;
    // Benign template mix; must sum to 1.
    double w_daemon_workers = 0.28;
    double w_web_fetch = 0.22;
    double w_file_job = 0.24;
    double w_log_rotate = 0.08;
    double w_backup_sync = 0.09;
    double w_recv_service = 0.09;
};

inline constexpr std::int64_t kDayStartNs = 1546300800000000000LL;  // simulated day
inline constexpr std::int64_t kDayLenNs = 86400000000000LL;

namespace synth_detail {

struct Entity {
    std::string id;
    EntityType type;
    std::string attr;
};

// Emits events against a registry of known entities, handing out sequential
// p/f/n ids.
class Builder {
public:
    Builder(std::vector<Event>& out, Rng& rng, int p0 = 0, int f0 = 0, int n0 = 0)
        : out_(out), rng_(rng), pc_(p0), fc_(f0), nc_(n0) {}

    Entity process(const std::string& cmdline) {
        return Entity{"p" + std::to_string(pc_++), EntityType::Process, cmdline};
    }
    Entity file(const std::string& path) {
        return Entity{"f" + std::to_string(fc_++), EntityType::File, path};
    }
    Entity netflow(const std::string& tuple) {
        return Entity{"n" + std::to_string(nc_++), EntityType::Netflow, tuple};
    }

    void emit(const Entity& src, EventType type, const Entity& dst, std::int64_t ts) {
        out_.push_back(Event{src.id, src.type, src.attr, dst.id, dst.type, dst.attr, type, ts});
    }

    int processes() const { return pc_; }
    int files() const { return fc_; }
    int netflows() const { return nc_; }
    Rng& rng() { return rng_; }

private:
    std::vector<Event>& out_;
    Rng& rng_;
    int pc_, fc_, nc_;
};

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&pool)[N]) {
    return pool[rng.index(N)];
}

inline std::string num(Rng& rng, int n) { return std::to_string(rng.index(n)); }

inline constexpr const char* kUsers[] = {"alice", "bob", "carol", "dave", "erin"};
inline constexpr const char* kWorkerCmds[] = {
    "/usr/bin/bash -c sync_task",  "/usr/bin/bash -c health_probe",
    "/usr/bin/python3 /opt/jobs/update_index.py", "/usr/bin/python3 /opt/jobs/clean_cache.py",
    "/usr/bin/bash -c queue_drain"};
inline constexpr const char* kJobScripts[] = {
    "sync_inventory", "parse_metrics", "rotate_keys",  "fetch_quotes", "render_report",
    "check_disk",     "update_index",  "clean_cache",  "build_digest", "merge_batches"};
inline constexpr const char* kDataNames[] = {"orders",  "customers", "invoices", "metrics",
                                             "sensors", "events",    "catalog",  "sessions"};
inline constexpr const char* kDocStems[] = {"notes", "report", "budget", "draft", "plan"};
inline constexpr const char* kDocExts[] = {"txt", "md", "xlsx"};
inline constexpr const char* kDlStems[] = {"update", "page", "bundle"};
inline constexpr const char* kDlExts[] = {"html", "tgz", "json"};
inline constexpr const char* kLogSvcs[] = {"web", "worker", "sync", "auth"};
inline constexpr const char* kExtIps[] = {"151.101.1.69",  "93.184.216.34", "142.250.72.14",
                                          "13.107.42.14",  "104.16.132.229", "185.199.108.153"};
inline constexpr const char* kExtPorts[] = {"443", "80", "53"};
inline constexpr const char* kFetchHosts[] = {"cdn.example.com", "api.vendor.io",
                                              "mirror.ubuntu.com", "feeds.newsnet.org"};
inline constexpr const char* kLocalIp = "192.168.10.21";

inline std::string eph_port(Rng& rng) { return std::to_string(40000 + rng.index(200)); }

inline std::string outbound_tuple(Rng& rng, const std::string& rip, const std::string& rport) {
    return std::string(kLocalIp) + " | " + eph_port(rng) + " | " + rip + " | " + rport;
}

// Random lowercase token that is (with overwhelming probability) absent from
// every benign vocabulary pool.
inline std::string novel_token(Rng& rng) {
    static constexpr char alphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::string t = "zq";
    for (int i = 0; i < 6; ++i) t += alphabet[rng.index(36)];
    return t;
}

}  // namespace synth_detail

// Deterministic benign event log over one simulated day. Persistent daemons,
// configuration files and service endpoints recur all day; worker processes,
// output files and connections are freshly instanced per activity.
inline std::vector<Event> generate_benign(const SynthConfig& cfg) {
    using namespace synth_detail;
    if (cfg.processes < 0 || cfg.files < 0 || cfg.netflows < 0)
        throw ConfigError("entity counts must be >= 0");
    const double wsum = cfg.w_daemon_workers + cfg.w_web_fetch + cfg.w_file_job +
                        cfg.w_log_rotate + cfg.w_backup_sync + cfg.w_recv_service;
    if (std::abs(wsum - 1.0) > 1e-9) throw ConfigError("benign template weights must sum to 1");

    std::vector<Event> log;
    if (cfg.processes == 0 && cfg.files == 0 && cfg.netflows == 0) return log;

    Rng rng(cfg.seed);
    Builder b(log, rng);

    // Persistent pool.
    const Entity sshd = b.process("/usr/sbin/sshd -D");
    const Entity cron = b.process("/usr/sbin/cron -f");
    const Entity journald = b.process("/usr/lib/systemd/systemd-journald");
    const Entity backupd = b.process("/usr/sbin/backupd --daemon");
    const Entity daemons[] = {sshd, cron, journald, backupd};

    // Persistent names reuse the pooled vocabulary, and every persistent
    // family holds more members than the KNN neighborhood size, so these
    // entities stay common in attribute space even when their degree makes
    // them structural outliers.
    std::vector<Entity> configs;
    for (const char* svc : kLogSvcs) configs.push_back(b.file("/etc/app/" + std::string(svc) + ".conf"));
    for (const char* name : kDataNames)
        configs.push_back(b.file("/etc/app/" + std::string(name) + ".conf"));
    configs.push_back(b.file("/etc/app/jobs.conf"));
    configs.push_back(b.file("/etc/app/update.conf"));
    std::vector<Entity> shared_logs;
    for (const char* svc : kLogSvcs)
        shared_logs.push_back(b.file("/var/log/app/" + std::string(svc) + ".shared.log"));
    for (const char* name : {"sensors", "events", "catalog", "sessions", "orders", "metrics"})
        shared_logs.push_back(b.file("/var/log/app/" + std::string(name) + ".shared.log"));
    std::vector<Entity> scripts;
    for (const char* s : kJobScripts) scripts.push_back(b.file("/opt/jobs/" + std::string(s) + ".py"));
    std::vector<Entity> data_files;
    for (const char* s : kDataNames) data_files.push_back(b.file("/srv/data/" + std::string(s) + ".csv"));
    std::vector<Entity> user_docs;
    for (const char* u : kUsers)
        for (int i = 0; i < 12; ++i)
            user_docs.push_back(b.file("/home/" + std::string(u) + "/docs/" +
                                       pick(rng, kDocStems) + "." + num(rng, 40) + "." +
                                       pick(rng, kDocExts)));

    std::int64_t clock = kDayStartNs;
    auto next_start = [&] {
        clock += 1000000LL + static_cast<std::int64_t>(rng.index(40000000ULL));  // 1-41 ms apart
        return clock;
    };
    auto step = [](std::int64_t& t) {
        std::int64_t cur = t;
        t += 200000;  // 0.2 ms between events of one activity
        return cur;
    };

    // Activity shapes carry deliberate count/edge-set variation so structural
    // embeddings spread over a continuum instead of collapsing onto a few
    // exact duplicates.
    // Persistent files have fixed consumers (services read their own configs,
    // jobs their own datasets), so hub contexts stay stable across the
    // train/validation/test windows.
    auto daemon_workers = [&] {
        std::int64_t t = next_start();
        const std::size_t di = rng.index(4);
        const Entity& d = daemons[di];
        Entity w = b.process(pick(rng, kWorkerCmds));
        Entity logf = b.file("/var/log/app/" + std::string(pick(rng, kLogSvcs)) + "." +
                             num(rng, 40) + ".log");
        b.emit(d, EventType::Clone, w, step(t));
        const int cfg_reads = 1 + static_cast<int>(rng.index(3));
        for (int i = 0; i < cfg_reads; ++i) {
            const Entity& cfgf = configs[(di + 4 * i) % configs.size()];
            if (rng.uniform() < 0.7) b.emit(w, EventType::Open, cfgf, step(t));
            b.emit(w, EventType::Read, cfgf, step(t));
        }
        b.emit(w, EventType::Write, logf, step(t));
        if (rng.uniform() < 0.4) b.emit(w, EventType::Open, logf, step(t));
        if (rng.uniform() < 0.3) {
            Entity w2 = b.process(pick(rng, kWorkerCmds));
            const Entity& cfg2 = configs[(di + 8) % configs.size()];
            b.emit(w, EventType::Clone, w2, step(t));
            b.emit(w2, EventType::Read, cfg2, step(t));
            b.emit(w2, EventType::Write, shared_logs[rng.index(shared_logs.size())], step(t));
        }
    };

    auto web_fetch = [&] {
        std::int64_t t = next_start();
        Entity p = b.process("/usr/bin/curl -s https://" + std::string(pick(rng, kFetchHosts)));
        Entity nf = b.netflow(outbound_tuple(rng, pick(rng, kExtIps), pick(rng, kExtPorts)));
        b.emit(p, EventType::Connect, nf, step(t));
        b.emit(p, EventType::SendTo, nf, step(t));
        if (rng.uniform() < 0.8) b.emit(nf, EventType::RecvFrom, p, step(t));
        if (rng.uniform() < 0.6) {
            Entity dl = b.file("/home/" + std::string(pick(rng, kUsers)) + "/downloads/" +
                               pick(rng, kDlStems) + "." + num(rng, 40) + "." + pick(rng, kDlExts));
            b.emit(p, EventType::Write, dl, step(t));
            if (rng.uniform() < 0.5) b.emit(p, EventType::Open, dl, step(t));
        }
    };

    auto file_job = [&] {
        std::int64_t t = next_start();
        const std::size_t si = rng.index(scripts.size());
        Entity p = b.process("/usr/bin/python3 " + scripts[si].attr);
        b.emit(p, EventType::Execute, scripts[si], step(t));
        const int reads = 2 + static_cast<int>(rng.index(3));
        for (int i = 0; i < reads; ++i) {
            const Entity& df = data_files[(si + i) % data_files.size()];
            if (rng.uniform() < 0.7) b.emit(p, EventType::Open, df, step(t));
            b.emit(p, EventType::Read, df, step(t));
        }
        Entity outf = b.file("/srv/out/" + std::string(pick(rng, kDataNames)) + "." + num(rng, 40) +
                             ".csv");
        b.emit(p, EventType::Write, outf, step(t));
        if (rng.uniform() < 0.4) b.emit(p, EventType::Read, outf, step(t));
    };

    auto log_rotate = [&] {
        std::int64_t t = next_start();
        Entity p = b.process("/usr/sbin/logrotate /etc/logrotate.conf");
        b.emit(cron, EventType::Clone, p, step(t));
        const int reads = 1 + static_cast<int>(rng.index(2));
        for (int i = 0; i < reads; ++i)
            b.emit(p, EventType::Read, shared_logs[rng.index(shared_logs.size())], step(t));
        Entity arch = b.file("/var/log/archive/" + std::string(pick(rng, kLogSvcs)) + "." +
                             num(rng, 40) + ".gz");
        b.emit(p, EventType::Write, arch, step(t));
    };

    auto backup_sync = [&] {
        std::int64_t t = next_start();
        Entity p = b.process("/usr/bin/rsync -a /home/" + std::string(pick(rng, kUsers)) + "/docs");
        b.emit(backupd, EventType::Clone, p, step(t));
        const int reads = 2 + static_cast<int>(rng.index(2));
        for (int i = 0; i < reads; ++i)
            b.emit(p, EventType::Read, user_docs[rng.index(user_docs.size())], step(t));
        Entity nf = b.netflow(outbound_tuple(rng, "10.0.0.5", "873"));
        b.emit(p, EventType::Connect, nf, step(t));
        b.emit(p, EventType::SendTo, nf, step(t));
    };

    auto recv_service = [&] {
        std::int64_t t = next_start();
        Entity session = b.process("/usr/bin/bash -l");
        Entity nf = b.netflow(std::string(kLocalIp) + " | 22 | 192.168.10." +
                              std::to_string(2 + rng.index(40)) + " | " + eph_port(rng));
        b.emit(sshd, EventType::Clone, session, step(t));
        b.emit(nf, EventType::RecvMsg, session, step(t));
        b.emit(session, EventType::SendMsg, nf, step(t));
        const int reads = 1 + static_cast<int>(rng.index(2));
        for (int i = 0; i < reads; ++i)
            b.emit(session, EventType::Read, configs[(12 + i) % configs.size()], step(t));
    };

    const double weights[] = {cfg.w_daemon_workers, cfg.w_web_fetch,    cfg.w_file_job,
                              cfg.w_log_rotate,     cfg.w_backup_sync,  cfg.w_recv_service};
    int activity = 0;
    while (b.processes() < cfg.processes || b.files() < cfg.files ||
           b.netflows() < cfg.netflows) {
        int choice;
        if (activity % 8 == 7) {
            // Steer toward the largest remaining deficit so every entity
            // target is reachable regardless of the weight mix.
            const double dp = cfg.processes > 0 ? 1.0 - static_cast<double>(b.processes()) /
                                                            cfg.processes
                                                : 0.0;
            const double df = cfg.files > 0 ? 1.0 - static_cast<double>(b.files()) / cfg.files
                                            : 0.0;
            const double dn = cfg.netflows > 0 ? 1.0 - static_cast<double>(b.netflows()) /
                                                           cfg.netflows
                                               : 0.0;
            choice = dn >= df && dn >= dp ? 1 : (df >= dp ? 2 : 0);
        } else {
            double r = rng.uniform(), acc = 0.0;
            choice = 5;
            for (int i = 0; i < 6; ++i) {
                acc += weights[i];
                if (r < acc) {
                    choice = i;
                    break;
                }
            }
        }
        switch (choice) {
            case 0: daemon_workers(); break;
            case 1: web_fetch(); break;
            case 2: file_job(); break;
            case 3: log_rotate(); break;
            case 4: backup_sync(); break;
            default: recv_service(); break;
        }
        ++activity;
    }
    return log;
}

// Injects one attack campaign. Attack events are timestamped inside the last
// quarter of the log's time range and merged in timestamp order; entity ids
// continue the log's own id sequences, so repeated injections yield disjoint
// campaigns.
struct InjectResult {
    std::vector<Event> log;
    CampaignLabels labels;
};

inline InjectResult inject_attack(std::vector<Event> log, const AttackScenario& scenario,
                                  std::uint64_t seed) {
    using namespace synth_detail;
    if (log.empty()) throw ConfigError("inject_attack: base log is empty");
    if (scenario.node_count < 1) throw ConfigError("attack node count must be >= 1");
    if (!scenario.knob_attr && !scenario.knob_struct && !scenario.knob_causal)
        throw ConfigError("attack scenario must enable at least one anomaly knob");

    // Continue the id counters and index reusable benign targets.
    int pmax = 0, fmax = 0, nmax = 0;
    std::map<std::string, Entity> registry;
    std::int64_t tmin = log.front().timestamp_ns, tmax = log.front().timestamp_ns;
    for (const Event& ev : log) {
        tmin = std::min(tmin, ev.timestamp_ns);
        tmax = std::max(tmax, ev.timestamp_ns);
        auto count = [&](const std::string& id, EntityType type, const std::string& attr) {
            if (!registry.count(id)) registry.emplace(id, Entity{id, type, attr});
            if (id.size() > 1) {
                const int k = std::atoi(id.c_str() + 1) + 1;
                if (id[0] == 'p') pmax = std::max(pmax, k);
                else if (id[0] == 'f') fmax = std::max(fmax, k);
                else if (id[0] == 'n') nmax = std::max(nmax, k);
            }
        };
        count(ev.src_id, ev.src_type, ev.src_attr);
        count(ev.dst_id, ev.dst_type, ev.dst_attr);
    }
    std::vector<Entity> benign_docs;
    for (const auto& [id, e] : registry)
        if (e.type == EntityType::File && e.attr.rfind("/home/", 0) == 0)
            benign_docs.push_back(e);

    Rng rng(seed ^ fnv1a64(scenario.campaign_id));
    std::vector<Event> attack;
    Builder b(attack, rng, pmax, fmax, nmax);

    std::int64_t t = tmin + (tmax - tmin) * 4 / 5;  // inside the final quarter
    auto step = [&t, &rng] {
        std::int64_t cur = t;
        t += 300000 + static_cast<std::int64_t>(rng.index(500000ULL));
        return cur;
    };

    // Name builders honoring the attribute knob.
    auto proc_attr = [&](int) {
        if (scenario.knob_attr)
            return "/tmp/." + novel_token(rng) + ".d/" + novel_token(rng) + " --qx --b64";
        return "/usr/bin/python3 /opt/jobs/" + std::string(pick(rng, kJobScripts)) + ".py";
    };
    auto file_attr = [&](int i) {
        if (scenario.knob_attr)
            return "/tmp/." + novel_token(rng) + ".d/stage." + std::to_string(i) + "." +
                   novel_token(rng);
        return "/srv/out/" + std::string(pick(rng, kDataNames)) + "." + num(rng, 40) + ".csv";
    };
    auto netflow_attr = [&] {
        if (scenario.knob_attr) {
            const std::string ip = std::to_string(23 + rng.index(200)) + "." +
                                   std::to_string(11 + rng.index(200)) + "." +
                                   std::to_string(rng.index(250)) + "." +
                                   std::to_string(1 + rng.index(250));
            return std::string(kLocalIp) + " | " + std::to_string(51000 + rng.index(400)) + " | " +
                   ip + " | " + std::to_string(6000 + rng.index(100));
        }
        return outbound_tuple(rng, pick(rng, kExtIps), "443");
    };

    std::set<std::string> campaign;
    auto track = [&](const Entity& e) {
        campaign.insert(e.id);
        return e;
    };

    switch (scenario.tag) {
        case ScenarioTag::ExfiltrationChain: {
            // Repeated file staging followed by network transmission, three
            // rounds. Entity budget: two processes, three netflows, the rest
            // staging files. With every knob off the event shapes mirror the
            // benign templates exactly (file-job writes, web-fetch flows,
            // backup-style document reads); each knob then perturbs exactly
            // one facet.
            const int nf_count = std::min(3, std::max(1, scenario.node_count - 2));
            const int proc_count =
                std::min(scenario.knob_struct ? 3 : 2, std::max(1, scenario.node_count - nf_count));
            const int file_count = std::max(0, scenario.node_count - proc_count - nf_count);

            std::vector<Entity> procs;
            for (int i = 0; i < proc_count; ++i) procs.push_back(track(b.process(proc_attr(i))));
            const Entity& p0 = procs[0];
            const Entity& p1 = procs.size() > 1 ? procs[1] : procs[0];
            std::vector<Entity> stage;
            for (int i = 0; i < file_count; ++i) stage.push_back(track(b.file(file_attr(i))));
            std::vector<Entity> flows;
            for (int i = 0; i < nf_count; ++i) flows.push_back(track(b.netflow(netflow_attr())));

            for (std::size_t i = 1; i < procs.size(); ++i)
                b.emit(p0, EventType::Clone, procs[i], step());
            const int doc_reads = scenario.knob_struct ? 12 : 3;
            for (int i = 0; i < doc_reads && !benign_docs.empty(); ++i)
                b.emit(p0, EventType::Read, benign_docs[rng.index(benign_docs.size())], step());

            for (int round = 0; round < nf_count; ++round) {
                const Entity& nf = flows[round];
                const Entity& writer = scenario.knob_struct || round % 2 == 0 ? p0 : p1;
                if (!stage.empty()) {
                    const Entity& s = stage[round % stage.size()];
                    b.emit(writer, EventType::Write, s, step());
                    if (scenario.knob_struct && procs.size() > 1) {
                        // Every process writes, reads back and executes every
                        // staging file: a motif no benign template produces,
                        // built entirely from benign-legal event types.
                        for (const Entity& sf : stage)
                            for (const Entity& pr : procs) {
                                b.emit(pr, EventType::Write, sf, step());
                                b.emit(pr, EventType::Open, sf, step());
                                b.emit(pr, EventType::Read, sf, step());
                                b.emit(pr, EventType::Execute, sf, step());
                            }
                    }
                    if (scenario.knob_causal) {
                        // Event types never seen on process->file pairs.
                        b.emit(writer, EventType::SendMsg, s, step());
                        b.emit(writer, EventType::Connect, s, step());
                    }
                }
                b.emit(p0, EventType::Connect, nf, step());
                b.emit(p0, EventType::SendTo, nf, step());
                if (!scenario.knob_struct) b.emit(nf, EventType::RecvFrom, p0, step());
                if (scenario.knob_struct) {
                    // Fan-in from every process plus combined send/receive
                    // event sets on each flow.
                    for (const Entity& pr : procs) {
                        b.emit(pr, EventType::Connect, nf, step());
                        b.emit(pr, EventType::SendTo, nf, step());
                        b.emit(pr, EventType::SendMsg, nf, step());
                        b.emit(nf, EventType::RecvFrom, pr, step());
                        b.emit(nf, EventType::RecvMsg, pr, step());
                    }
                }
                if (scenario.knob_causal) {
                    // Event types never seen on process->netflow pairs.
                    b.emit(p0, EventType::Write, nf, step());
                    b.emit(p0, EventType::Open, nf, step());
                    b.emit(p0, EventType::Execute, nf, step());
                }
            }
            for (std::size_t i = nf_count; i < stage.size(); ++i) {
                b.emit(p1, EventType::Write, stage[i], step());
                if (scenario.knob_causal) b.emit(p1, EventType::SendMsg, stage[i], step());
            }
            break;
        }
        case ScenarioTag::Dropper: {
            // Download, drop to disk, execute, fan out.
            Entity nf = track(b.netflow(netflow_attr()));
            Entity payload = track(b.file(file_attr(0)));
            Entity p0 = track(b.process(proc_attr(0)));
            b.emit(p0, EventType::Connect, nf, step());
            b.emit(p0, EventType::SendTo, nf, step());
            b.emit(nf, EventType::RecvFrom, p0, step());
            b.emit(p0, EventType::Write, payload, step());
            if (scenario.knob_causal) b.emit(nf, EventType::Write, p0, step());
            Entity prev = p0;
            for (int i = 3; i < scenario.node_count; ++i) {
                Entity child = track(b.process(proc_attr(i)));
                b.emit(prev, EventType::Clone, child, step());
                b.emit(child, EventType::Execute, payload, step());
                if (scenario.knob_causal) b.emit(child, EventType::Execute, nf, step());
                if (scenario.knob_struct) prev = child;  // deep clone chain
            }
            break;
        }
        case ScenarioTag::BackdoorNetflow: {
            // Long-lived inbound shell.
            Entity nf = track(b.netflow(netflow_attr()));
            std::vector<Entity> shells;
            const int shell_count = std::max(1, scenario.node_count - 1);
            for (int i = 0; i < shell_count; ++i) shells.push_back(track(b.process(proc_attr(i))));
            for (int i = 0; i < shell_count; ++i) {
                b.emit(nf, EventType::RecvMsg, shells[i], step());
                b.emit(shells[i], EventType::SendMsg, nf, step());
                if (scenario.knob_struct) {
                    b.emit(shells[i], EventType::Connect, nf, step());
                    b.emit(shells[i], EventType::SendTo, nf, step());
                }
                if (scenario.knob_causal) b.emit(nf, EventType::Write, shells[i], step());
                for (int r = 0; r < 2 && !benign_docs.empty(); ++r)
                    b.emit(shells[i], EventType::Read, benign_docs[rng.index(benign_docs.size())],
                           step());
            }
            break;
        }
    }

    InjectResult result;
    result.labels[scenario.campaign_id] = std::move(campaign);
    result.log = std::move(log);
    result.log.insert(result.log.end(), attack.begin(), attack.end());
    std::stable_sort(result.log.begin(), result.log.end(),
                     [](const Event& a, const Event& b) { return a.timestamp_ns < b.timestamp_ns; });
    return result;
}

inline void write_log(std::ostream& os, const std::vector<Event>& log) {
    for (const Event& ev : log) os << format_event_line(ev) << "\n";
}

inline std::vector<Event> read_log(std::istream& is) {
    std::vector<Event> log;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        log.push_back(parse_event_line(line));
    }
    return log;
}

inline void write_labels(std::ostream& os, const CampaignLabels& labels) {
    for (const auto& [cid, nodes] : labels)
        for (const std::string& id : nodes) os << cid << '\t' << id << "\n";
}

inline CampaignLabels read_labels(std::istream& is) {
    CampaignLabels labels;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("bad labels line: '" + line + "'");
        labels[line.substr(0, tab)].insert(line.substr(tab + 1));
    }
    return labels;
}

// Date-based partitioning of the simulated day: first half trains, the next
// quarter validates, the final quarter (which carries any injected attack)
// tests.
struct SplitBounds {
    std::int64_t train_end = 0;
    std::int64_t val_end = 0;
};

inline SplitBounds split_bounds(const std::vector<Event>& log) {
    if (log.empty()) throw ConfigError("cannot split an empty log");
    std::int64_t lo = log.front().timestamp_ns, hi = log.front().timestamp_ns;
    for (const Event& ev : log) {
        lo = std::min(lo, ev.timestamp_ns);
        hi = std::max(hi, ev.timestamp_ns);
    }
    return SplitBounds{lo + (hi - lo) / 2, lo + (hi - lo) * 3 / 4};
}

}  // namespace provdet
