//! Serves a scripted backend over HTTP and runs a session against it through
//! the network client. Pass `--serve` to keep the server up for other clients.

use std::sync::Arc;

use refer_engine::backend::mock::MockBackend;
use refer_engine::backend::BackendServer;
use refer_engine::config::Config;
use refer_engine::mock_fixtures::{self, FixtureTemplate};
use refer_engine::orchestrator;

fn main() -> anyhow::Result<()> {
    let serve = std::env::args().any(|a| a == "--serve");
    let mut cfg = Config::default();
    let fixture = mock_fixtures::generate(FixtureTemplate::MultiTarget, 2, &cfg)?;
    let mock = Arc::new(MockBackend::new(fixture.scenario.clone())?);
    let server = BackendServer::local(mock.clone())?;
    let base = server.base_url();
    println!("serving on {base}");

    cfg.backends.chat_url = Some(format!("{base}/v1/chat"));
    cfg.backends.similarity_url = Some(format!("{base}/v1/similarity"));
    cfg.backends.segment_url = Some(format!("{base}/v1/segment"));
    let backend = cfg.backends.connect()?;
    let result = orchestrator::run_session(&fixture.clip, &fixture.query, &cfg, backend)
        .map_err(|f| anyhow::anyhow!("{}", f.error))?;
    println!(
        "query {:?}: {:?} with {} targets, {} backend calls",
        fixture.query,
        result.status,
        result.masklets.len(),
        mock.calls().len()
    );

    if serve {
        println!("press Ctrl-C to stop");
        loop {
            std::thread::park();
        }
    }
    Ok(())
}
