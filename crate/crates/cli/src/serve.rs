use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use scriptrate_service::{Service, ServiceConfig};

use crate::args::ServeArgs;
use crate::CliError;

pub fn run(args: &ServeArgs) -> Result<(), CliError> {
    let a = &args.analyzer;
    let config = ServiceConfig {
        retention: Duration::from_secs(args.retention_hours * 3600),
        max_upload_bytes: args.max_upload_mb * 1024 * 1024,
        max_concurrent_uploads: args.max_concurrent_uploads,
        analyzer: a.analyzer_config()?,
        parallelism: a.parallelism(),
        lexicon: a.lexicon()?,
        model_addr: a.model_addr.clone(),
        mock: a.mock_backend()?,
        db_path: args.db.clone(),
        ..ServiceConfig::default()
    };
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Config(format!("bad listen address: {e}")))?;
    let service = Service::new(config).map_err(|e| CliError::Config(e.to_string()))?;

    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Config(e.to_string()))?;
    eprintln!("listening on http://{addr}");
    runtime
        .block_on(scriptrate_service::serve(Arc::new(service), addr))
        .map_err(|e| CliError::Config(format!("server: {e}")))
}
