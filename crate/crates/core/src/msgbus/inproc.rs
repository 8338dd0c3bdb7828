use std::sync::Arc;
use std::time::Duration;

use super::hub::{Hub, Mailbox};
use super::{BusClient, BusConfig, BusConnector, BusError, Envelope};

/// Bus whose clients share the routing structure directly.
#[derive(Clone)]
pub struct InProcBus {
    hub: Arc<Hub>,
}

impl InProcBus {
    pub fn new() -> Self {
        Self::with_config(BusConfig::default())
    }

    pub fn with_config(config: BusConfig) -> Self {
        Self { hub: Arc::new(Hub::new(config)) }
    }

    pub fn client(&self, id: &str) -> Result<InProcClient, BusError> {
        let mailbox = self.hub.register(id)?;
        Ok(InProcClient { id: id.to_string(), hub: Arc::clone(&self.hub), mailbox })
    }
}

impl Default for InProcBus {
    fn default() -> Self {
        Self::new()
    }
}

impl BusConnector for InProcBus {
    fn connect(&self, client_id: &str) -> Result<Box<dyn BusClient>, BusError> {
        Ok(Box::new(self.client(client_id)?))
    }
}

/// Disconnects on drop.
pub struct InProcClient {
    id: String,
    hub: Arc<Hub>,
    mailbox: Arc<Mailbox>,
}

impl BusClient for InProcClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn subscribe(&mut self, topic: &str) -> Result<(), BusError> {
        self.hub.subscribe(&self.id, topic)
    }

    fn unsubscribe(&mut self, topic: &str) -> Result<(), BusError> {
        self.hub.unsubscribe(&self.id, topic)
    }

    fn publish(&mut self, topic: &str, payload: &[u8]) -> Result<(), BusError> {
        self.hub.publish(&self.id, topic, payload)
    }

    fn next_message(&mut self, timeout: Duration) -> Result<Option<Envelope>, BusError> {
        self.mailbox.pop(Some(timeout)).map_err(BusError::from)
    }
}

impl Drop for InProcClient {
    fn drop(&mut self) {
        self.hub.unregister(&self.id);
    }
}

#[cfg(test)]
mod tests {
    use super::super::ErrCode;
    use super::*;

    const T: Duration = Duration::from_millis(10);

    #[test]
    fn duplicate_ids_rejected_until_dropped() {
        let bus = InProcBus::new();
        let first = bus.client("a1").unwrap();
        assert_eq!(bus.client("a1").err().and_then(|e| e.code()), Some(ErrCode::Id));
        drop(first);
        assert!(bus.client("a1").is_ok());
    }

    #[test]
    fn overflow_cuts_off_slow_client() {
        let bus = InProcBus::with_config(BusConfig { queue_capacity: 2, ..BusConfig::default() });
        let mut slow = bus.client("slow").unwrap();
        let mut fast = bus.client("fast").unwrap();
        slow.subscribe("t").unwrap();
        fast.subscribe("t").unwrap();
        let mut pub_ = bus.client("pub").unwrap();
        for _ in 0..2 {
            pub_.publish("t", b"x").unwrap();
            assert!(fast.next_message(T).unwrap().is_some());
        }
        pub_.publish("t", b"x").unwrap();
        assert!(matches!(slow.next_message(T), Err(BusError::Overflow)));
        assert!(fast.next_message(T).unwrap().is_some());
        assert!(matches!(slow.publish("t", b"x"), Err(BusError::Disconnected)));
    }

    #[test]
    fn oversized_payload_rejected() {
        let bus = InProcBus::new();
        let mut c = bus.client("c").unwrap();
        let big = vec![0u8; super::super::MAX_PAYLOAD + 1];
        assert_eq!(c.publish("t", &big).unwrap_err().code(), Some(ErrCode::Size));
        assert!(c.publish("t", &big[1..]).is_ok());
    }
}
