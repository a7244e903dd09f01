#include <doctest.h>

#include "surveysim/common/errors.hpp"
#include "surveysim/common/random.hpp"
#include "surveysim/llm/batch.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

using namespace surveysim;
using namespace surveysim::llm;
using agents::ResponseMode;
using corpus::AnswerValue;
using corpus::CategoricalKind;
using corpus::NumericKind;
using corpus::SurveyItem;

namespace {

const SurveyItem kFtp03{"SHARE-FTP03", "When do you plan to stop working?",
                        CategoricalKind{{"Next year", "Next few years", "In 5-10 years", "Never"}}, "FTP", false};
const SurveyItem kFtp01{"SHARE-FTP01", "What are the chances that you will live to age XX or more?",
                        NumericKind{0, 100}, "FTP", false};
const SurveyItem kFk01{"SHARE-FK01", "How much would you have after two years?",
                       CategoricalKind{{"More than 2400 euros", "2420 euros", "Less than 2400 euros"}}, "FK", false};
const SurveyItem kLikert{"KFP1", "I know how to plan for retirement.", NumericKind{1, 7}, "KFP", false};

corpus::SurveyCorpus corpus_with(std::size_t n) {
    corpus::SurveyCorpus c;
    c.instrument = corpus::Instrument{{kFtp03, kFtp01, kFk01}};
    for (std::size_t i = 0; i < n; ++i) {
        corpus::RespondentRecord r{"p" + std::to_string(i), "France", 60 + static_cast<int>(i % 20), {}};
        r.answers["SHARE-FTP03"] = AnswerValue::categorical(kFtp03.options()[i % 4]);
        r.answers["SHARE-FTP01"] = AnswerValue::numeric(static_cast<double>(i * 7 % 101));
        r.answers["SHARE-FK01"] = AnswerValue::categorical(kFk01.options()[i % 3]);
        c.respondents.push_back(r);
    }
    return c;
}

ElicitationTask task_for(const corpus::RespondentRecord &r, const SurveyItem &item,
                         ResponseMode mode = ResponseMode::discrete_options) {
    agents::AgentProfile p{r.respondent_id, agents::Condition::demo3, {{"Country", r.country}}, item.code};
    auto target = agents::make_target(item, mode);
    auto bundle = agents::render_prompt(p, target);
    return {p, target, bundle, r.answers.at(item.code)};
}

double variance(const std::vector<double> &xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double s = 0.0;
    for (double x : xs) {
        s += (x - mean) * (x - mean);
    }
    return s / (xs.size() - 1);
}

} // namespace

TEST_CASE("generation config serializes the default hyperparameters") {
    GenerationConfig g;
    CHECK_NOTHROW(g.validate());
    agents::PromptBundle b{"sys", "user", g};
    const auto j = request_body(b, g, ApiStyle::ollama_chat);
    CHECK(j["options"]["temperature"] == 0.6);
    CHECK(j["options"]["top_k"] == 20);
    CHECK(j["options"]["top_p"] == 0.95);
    CHECK(j["options"]["repeat_penalty"] == 1.0);
    CHECK(j["options"]["num_ctx"] == 8000);
    CHECK(j["think"] == true);
    CHECK(j["messages"][0]["role"] == "system");
    CHECK(j["messages"][1]["content"] == "user");
    const auto o = request_body(b, g, ApiStyle::openai_chat);
    CHECK(o["top_p"] == 0.95);

    g.top_p = 0.0;
    CHECK_THROWS_AS(g.validate(), ConfigurationError);
    g = {};
    g.temperature = -1;
    CHECK_THROWS_AS(g.validate(), ConfigurationError);
}

TEST_CASE("response_text handles both wire shapes") {
    CHECK(response_text(nlohmann::json::parse(R"({"message":{"content":"42"}})")) == "42");
    CHECK(response_text(nlohmann::json::parse(R"({"message":{"content":"42","thinking":"hmm"}})")) ==
          "<think>hmm</think>42");
    CHECK(response_text(nlohmann::json::parse(R"({"choices":[{"message":{"content":"7"}}]})")) == "7");
    CHECK_THROWS_AS(response_text(nlohmann::json::parse(R"({"foo":1})")), TransportError);
}

TEST_CASE("parse_answer examples") {
    CHECK(parse_answer("...therefore I choose: Next few years", kFtp03, ResponseMode::discrete_options).value ==
          AnswerValue::categorical("Next few years"));
    CHECK(parse_answer("I'd say about 70 out of 100.", kFtp01, ResponseMode::continuous_0_100).value ==
          AnswerValue::numeric(70));
    CHECK(parse_answer("maybe A or maybe B", kFtp03, ResponseMode::discrete_options).value ==
          AnswerValue::missing(corpus::MissingReason::unparseable));
    CHECK(parse_answer("maybe A or maybe B", kFtp01, ResponseMode::continuous_0_100).value ==
          AnswerValue::missing(corpus::MissingReason::unparseable));
}

TEST_CASE("parse_answer details") {
    const auto discrete = ResponseMode::discrete_options;
    // Last mention wins; nested labels prefer the longer one.
    CHECK(parse_answer("Options: Next year, Never. I pick NEVER!", kFtp03, discrete).value ==
          AnswerValue::categorical("Never"));
    CHECK(parse_answer("Probably next year.", kFtp03, discrete).value == AnswerValue::categorical("Next year"));
    CHECK(parse_answer("Answer: 2420 euros", kFk01, discrete).value == AnswerValue::categorical("2420 euros"));
    CHECK(parse_answer("Answer: More than 2400 euros", kFk01, discrete).value ==
          AnswerValue::categorical("More than 2400 euros"));
    // Thinking is ignored, including an unterminated segment.
    CHECK(parse_answer("<think>Never, surely</think>Next year", kFtp03, discrete).value ==
          AnswerValue::categorical("Next year"));
    CHECK(parse_answer("Next year <think>or Never", kFtp03, discrete).value == AnswerValue::categorical("Next year"));
    CHECK(parse_answer("reasoning Never </think> Next year", kFtp03, discrete).value ==
          AnswerValue::categorical("Next year"));
    // Missing-reason names map to missing values.
    CHECK(parse_answer("I don't know", kFtp03, discrete).value ==
          AnswerValue::missing(corpus::MissingReason::dont_know));

    // Continuous: clipping counted, denominators skipped, range mapping.
    const auto cont = ResponseMode::continuous_0_100;
    auto out = parse_answer("105", kFtp01, cont);
    CHECK(out.value == AnswerValue::numeric(100));
    CHECK(out.clipped);
    CHECK(parse_answer("My estimate: 65/100", kFtp01, cont).value == AnswerValue::numeric(65));
    CHECK(parse_answer("between 0-100 I'd say 40", kFtp01, cont).value == AnswerValue::numeric(40));
    CHECK(parse_answer("-5", kFtp01, cont).value == AnswerValue::numeric(0));
    CHECK(parse_answer("50", kLikert, cont).value == AnswerValue::numeric(4));
    CHECK(parse_answer("I pick 6 on the scale", kLikert, discrete).value == AnswerValue::numeric(6));
    CHECK(parse_answer("1,250.5", SurveyItem{"X", "x", NumericKind{0, 5000}, "", false}, discrete).value ==
          AnswerValue::numeric(1250.5));
}

TEST_CASE("parse_answer never leaves the option set") {
    Rng rng(2);
    const std::vector<std::string> words{"next", "year", "few", "years", "never", "in", "5", "10", "maybe", "no",
                                         "don't", "know", ",", "-", "<think>", "</think>"};
    for (int trial = 0; trial < 2000; ++trial) {
        std::string s;
        const auto n = 1 + uniform_index(rng, 12);
        for (std::uint64_t i = 0; i < n; ++i) {
            s += words[uniform_index(rng, words.size())] + " ";
        }
        const auto v = parse_answer(s, kFtp03, ResponseMode::discrete_options).value;
        if (v.is_categorical()) {
            CHECK(kFtp03.option_index(v.label()).has_value());
        }
    }
}

TEST_CASE("mock policies") {
    const agents::AgentProfile profile{"p", agents::Condition::demo7, {}, std::nullopt};
    const auto cont = agents::make_target(kFtp01, ResponseMode::continuous_0_100);
    CHECK(simulate_mock(profile, cont, EchoTruth{}, AnswerValue::numeric(70), 1) == "70");

    const auto fk = agents::make_target(kFk01);
    for (std::uint64_t s = 0; s < 100; ++s) {
        CHECK(simulate_mock(profile, fk, HyperAccurate{"2420 euros", 1.0}, AnswerValue::categorical("2420 euros"), s) ==
              "2420 euros");
    }
    CHECK_THROWS_AS(simulate_mock(profile, cont, HyperAccurate{"2420 euros", 1.0}, AnswerValue::numeric(1), 0),
                    ConfigurationError);
    CHECK_THROWS_AS(simulate_mock(profile, fk, FixedLabel{"3000 euros"}, AnswerValue{}, 0), ConfigurationError);
    CHECK_THROWS_AS(simulate_mock(profile, fk, EchoTruth{}, AnswerValue{}, 0), ConfigurationError);

    // Central tendency: mean 50 +- 1, stdev 5 +- 10%.
    std::vector<double> central, uniform;
    for (std::uint64_t s = 0; s < 10000; ++s) {
        central.push_back(std::stod(simulate_mock(profile, cont, CentralTendency{50, 5}, AnswerValue{}, s)));
        uniform.push_back(std::stod(simulate_mock(profile, cont, UniformRandom{}, AnswerValue{}, s)));
    }
    const double mean = std::accumulate(central.begin(), central.end(), 0.0) / central.size();
    CHECK(std::fabs(mean - 50) < 1.0);
    CHECK(std::fabs(std::sqrt(variance(central)) - 5.0) < 0.5);
    CHECK(variance(central) < variance(uniform));

    // Categorical central tendency concentrates on the middle options.
    std::map<std::string, int> counts;
    for (std::uint64_t s = 0; s < 2000; ++s) {
        counts[simulate_mock(profile, fk, CentralTendency{1.0, 0.5}, AnswerValue{}, s)]++;
    }
    CHECK(counts["2420 euros"] > counts["More than 2400 euros"]);
    CHECK(counts["2420 euros"] > counts["Less than 2400 euros"]);

    // Reproducible.
    CHECK(simulate_mock(profile, cont, CentralTendency{50, 5}, AnswerValue{}, 77) ==
          simulate_mock(profile, cont, CentralTendency{50, 5}, AnswerValue{}, 77));
}

TEST_CASE("run_batch majority vote with EchoTruth") {
    const auto corpus = corpus_with(30);
    std::vector<ElicitationTask> tasks;
    for (const auto &r : corpus.respondents) {
        tasks.push_back(task_for(r, kFtp03));
    }
    MockBackend backend({{"*", EchoTruth{}}}, 9);
    const auto result = run_batch(tasks, backend, corpus, {.runs = 15, .aggregation = Aggregation::majority_vote});
    std::size_t constituents = 0, aggregates = 0;
    for (const auto &rec : result.records) {
        const auto &truth = corpus.find_respondent(rec.respondent_id)->answers.at(rec.item_code);
        CHECK(rec.parsed == truth);
        constituents += rec.role == RecordRole::constituent;
        aggregates += rec.role == RecordRole::aggregate;
    }
    CHECK(constituents == 450);
    CHECK(aggregates == 30);
    CHECK(result.diagnostics.elicitations == 450);

    CHECK_THROWS_AS(run_batch(tasks, backend, corpus, {.runs = 4, .aggregation = Aggregation::majority_vote}),
                    ConfigurationError);
    CHECK_THROWS_AS(run_batch(tasks, backend, corpus, {.runs = 0}), ConfigurationError);
}

TEST_CASE("run_batch single mode, schedule independence and unknown respondents") {
    const auto corpus = corpus_with(40);
    std::vector<ElicitationTask> tasks;
    for (const auto &r : corpus.respondents) {
        tasks.push_back(task_for(r, kFtp01, ResponseMode::continuous_0_100));
        tasks.push_back(task_for(r, kFtp03));
    }
    MockBackend backend({{"*", UniformRandom{}}}, 5);
    const auto serial = run_batch(tasks, backend, corpus, {.runs = 2, .workers = 1});
    const auto parallel = run_batch(tasks, backend, corpus, {.runs = 2, .workers = 8});
    CHECK(serial.records == parallel.records);
    CHECK(serial.records.size() == tasks.size() * 2);

    const auto once = run_batch(tasks, backend, corpus, {.runs = 1});
    for (std::size_t i = 0; i < once.records.size(); ++i) {
        CHECK(once.records[i].role == RecordRole::single);
    }

    auto stray = tasks;
    stray.push_back(tasks.front());
    stray.back().profile.respondent_id = "ghost";
    CHECK_THROWS_AS(run_batch(stray, backend, corpus), IntegrityError);
}

TEST_CASE("majority vote helper") {
    const std::vector<AnswerValue> abA{AnswerValue::categorical("Next year"), AnswerValue::categorical("Next year"),
                                       AnswerValue::categorical("Never")};
    CHECK(majority_vote(abA, kFtp03) == AnswerValue::categorical("Next year"));
    const std::vector<AnswerValue> nums{AnswerValue::numeric(10), AnswerValue::numeric(90), AnswerValue::numeric(30),
                                        AnswerValue::missing(corpus::MissingReason::unparseable)};
    CHECK(majority_vote(nums, kFtp01) == AnswerValue::numeric(30));
    const std::vector<AnswerValue> same(5, AnswerValue::categorical("Never"));
    CHECK(majority_vote(same, kFtp03) == same[0]);
}

TEST_CASE("prediction log round trip and replay") {
    const auto corpus = corpus_with(10);
    std::vector<ElicitationTask> tasks;
    for (const auto &r : corpus.respondents) {
        tasks.push_back(task_for(r, kFtp01, ResponseMode::continuous_0_100));
        tasks.push_back(task_for(r, kFk01));
    }
    MockBackend backend({{"SHARE-FTP01", CentralTendency{50, 10}}, {"*", UniformRandom{}}}, 3);
    const auto result = run_batch(tasks, backend, corpus, {.runs = 3, .aggregation = Aggregation::majority_vote});
    std::stringstream ss;
    write_prediction_log(ss, result.records);
    const auto back = read_prediction_log(ss);
    CHECK(back == result.records);

    ReplayBackend replay(back);
    const auto again = run_batch(tasks, replay, corpus, {.runs = 3, .aggregation = Aggregation::majority_vote});
    CHECK(again.records == result.records);

    std::stringstream bad("{\"respondent_id\": 1}\n");
    CHECK_THROWS_AS(read_prediction_log(bad), ParseError);
}

TEST_CASE("live client against a local stub server") {
    httplib::Server server;
    std::atomic<int> hits{0};
    nlohmann::json last_request;
    std::mutex m;
    server.Post("/api/chat", [&](const httplib::Request &req, httplib::Response &res) {
        ++hits;
        {
            std::lock_guard lock(m);
            last_request = nlohmann::json::parse(req.body);
        }
        res.set_content(R"({"message":{"role":"assistant","content":"42"}})", "application/json");
    });
    server.Post("/flaky", [&](const httplib::Request &, httplib::Response &res) {
        if (++hits % 2 == 1) {
            res.status = 503;
            return;
        }
        res.set_content(R"({"choices":[{"message":{"content":"ok"}}]})", "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const std::string base = "http://127.0.0.1:" + std::to_string(port);
    std::vector<std::string> audit;
    HttpBackend client({.base_url = base, .backoff_ms = 1},
                       [&](const std::string &req, const std::string &resp) { audit.push_back(req + "|" + resp); });
    agents::PromptBundle bundle{"system", "user", {}};
    CHECK(client.complete(bundle) == "42");
    CHECK(audit.size() == 1);
    {
        std::lock_guard lock(m);
        CHECK(last_request["options"]["top_k"] == 20);
    }

    hits = 0;
    HttpBackend flaky({.base_url = base, .path = "/flaky", .api = ApiStyle::openai_chat, .backoff_ms = 1});
    CHECK(flaky.complete(bundle) == "ok");
    CHECK(hits == 2);

    HttpBackend missing({.base_url = base, .path = "/nope", .backoff_ms = 1});
    CHECK_THROWS_AS(missing.complete(bundle), TransportError);

    server.stop();
    thread.join();

    // Nothing listens on the old port any more.
    HttpBackend dead({.base_url = base, .timeout_ms = 500, .max_attempts = 2, .backoff_ms = 1});
    CHECK_THROWS_AS(dead.complete(bundle), TransportError);

    // Batch with a dead backend records missing values, then aborts past the threshold.
    const auto corpus = corpus_with(4);
    std::vector<ElicitationTask> tasks;
    for (const auto &r : corpus.respondents) {
        tasks.push_back(task_for(r, kFtp03));
    }
    const auto tolerant = run_batch(tasks, dead, corpus, {.workers = 1, .max_failures = 100});
    CHECK(tolerant.diagnostics.transport_failures == 4);
    for (const auto &rec : tolerant.records) {
        CHECK(rec.parsed == AnswerValue::missing(corpus::MissingReason::unparseable));
    }
    std::size_t partial = 99;
    CHECK_THROWS_AS(run_batch(tasks, dead, corpus,
                              {.workers = 1,
                               .max_failures = 2,
                               .on_abort = [&](const std::vector<PredictionRecord> &r) { partial = r.size(); }}),
                    BackendUnavailableError);
    CHECK(partial == 2);
}
