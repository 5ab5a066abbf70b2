//! Holds the `acceptance` test target. The suite itself lives in
//! `qstir_lab::acceptance` so that `qstir selftest` can run it too.
