//! Criterion benchmark harness for the charsum workspace; see benches/.
