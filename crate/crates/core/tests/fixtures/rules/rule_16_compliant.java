String payload = "hello";
try {
    byte[] encoded = payload.getBytes("UTF-8");
} catch (Exception e) {
    e.printStackTrace();
}
